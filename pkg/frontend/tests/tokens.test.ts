import { describe, expect, it } from "vitest";

import { VocabularyView } from "../src/tokens.js";

// A miniature vocabulary shaped like the service's: reserved tokens
// first, then single characters.
const TOKENS = [
  "</s>", "SELECT", "ASK", "DISTINCT", "COUNT", "WHERE", "{", "}", ".",
  "?var0", "?var1", "[", "]", "(", ")",
  " ", "a", "b", "c", "d", "m", "y",
];

describe("VocabularyView", () => {
  const vocab = new VocabularyView(TOKENS);

  it("resolves ids and rejects unknown tokens", () => {
    expect(vocab.idOf("SELECT")).toBe(1);
    expect(vocab.idOf("a")).toBe(16);
    expect(() => vocab.idOf("nope")).toThrow();
  });

  it("tokenizes identifiers as bracket + characters + bracket", () => {
    const ids = vocab.tokenizeIdentifier("[ a ]");
    expect(ids.map((i) => TOKENS[i])).toEqual(["[", "a", "]"]);
  });

  it("keeps identifier body spaces as tokens", () => {
    const ids = vocab.tokenizeIdentifier("[ ab cd ]");
    expect(ids.map((i) => TOKENS[i])).toEqual(["[", "a", "b", " ", "c", "d", "]"]);
  });

  it("rejects malformed surfaces", () => {
    expect(() => vocab.tokenizeIdentifier("[a]")).toThrow();
    expect(() => vocab.tokenizeIdentifier("[  ]")).toThrow();
  });

  it("tokenizes full queries with bracket grouping", () => {
    const ids = vocab.tokenizeQuery("SELECT ?var0 WHERE { [ ab ] [ c ] ?var0 . }");
    expect(ids.map((i) => TOKENS[i])).toEqual([
      "SELECT", "?var0", "WHERE", "{",
      "[", "a", "b", "]",
      "[", "c", "]",
      "?var0", ".", "}",
    ]);
  });

  it("reports unterminated identifiers", () => {
    expect(() => vocab.tokenizeQuery("ASK { [ ab")).toThrow(/unterminated/);
  });
});
