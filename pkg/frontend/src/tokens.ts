/**
 * Client-side view of the service vocabulary.
 *
 * Mirrors the engine's canonical text format: structural tokens are
 * space-separated pieces, bracketed identifiers are `[` + one token per
 * body character + `]`. Tokenizing here lets a client drive sessions
 * from query text without another round trip.
 */

export class VocabularyView {
  readonly tokens: string[];
  private readonly index = new Map<string, number>();

  constructor(tokens: string[]) {
    this.tokens = tokens;
    tokens.forEach((tok, i) => this.index.set(tok, i));
  }

  get size(): number {
    return this.tokens.length;
  }

  idOf(token: string): number {
    const id = this.index.get(token);
    if (id === undefined) throw new Error(`unknown token ${JSON.stringify(token)}`);
    return id;
  }

  /** `[ body ]` into `[`, characters, `]`. */
  tokenizeIdentifier(surface: string): number[] {
    if (!surface.startsWith("[ ") || !surface.endsWith(" ]") || surface.length < 5) {
      throw new Error(`identifier surface must look like '[ body ]': ${surface}`);
    }
    const body = surface.slice(2, -2);
    const out = [this.idOf("[")];
    for (const ch of body) out.push(this.idOf(ch));
    out.push(this.idOf("]"));
    return out;
  }

  /** Canonical query text into token ids. */
  tokenizeQuery(text: string): number[] {
    const pieces = text.split(/\s+/).filter((p) => p.length > 0);
    const out: number[] = [];
    let i = 0;
    while (i < pieces.length) {
      if (pieces[i] === "[") {
        const body: string[] = [];
        let j = i + 1;
        while (j < pieces.length && pieces[j] !== "]") {
          body.push(pieces[j]!);
          j++;
        }
        if (j === pieces.length) throw new Error("unterminated identifier: missing ']'");
        out.push(...this.tokenizeIdentifier(`[ ${body.join(" ")} ]`));
        i = j + 1;
      } else {
        out.push(this.idOf(pieces[i]!));
        i++;
      }
    }
    return out;
  }
}
