/**
 * Logits processors that apply packed constraint masks.
 *
 * The adapter between the service's session masks and a local generation
 * loop: fetch the mask for the current step, run the logits through the
 * processor, sample or argmax, advance the sequence, repeat.
 */

import { getBit } from "./bitset.js";

/** Processors modify model output logits before sampling. */
export interface LogitsProcessor {
  process(logits: Float32Array, inputIds: number[]): Float32Array;
}

/**
 * Sets the logit of every token whose mask bit is unset to -Infinity.
 * Returns a new array; the input is never modified.
 */
export class PackedMaskProcessor implements LogitsProcessor {
  constructor(private readonly mask: Uint8Array) {}

  process(logits: Float32Array, _inputIds: number[] = []): Float32Array {
    const out = new Float32Array(logits.length);
    for (let i = 0; i < logits.length; i++) {
      out[i] = getBit(this.mask, i) ? logits[i]! : -Infinity;
    }
    return out;
  }
}

/** Chain of processors applied in order. */
export class LogitsProcessorList implements LogitsProcessor {
  constructor(private readonly processors: LogitsProcessor[]) {}

  process(logits: Float32Array, inputIds: number[] = []): Float32Array {
    let current = logits;
    for (const p of this.processors) {
      current = p.process(current, inputIds);
    }
    return current;
  }
}

/** Index of the largest finite logit; ties go to the smallest index. */
export function argmax(logits: Float32Array): number {
  let best = -1;
  let bestValue = -Infinity;
  for (let i = 0; i < logits.length; i++) {
    const v = logits[i]!;
    if (v > bestValue) {
      bestValue = v;
      best = i;
    }
  }
  if (best < 0) throw new Error("all logits are -Infinity; the hypothesis is dead");
  return best;
}
