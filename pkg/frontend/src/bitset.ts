/**
 * Packed allowed-token bitsets as exchanged with the decoding service.
 *
 * Bit order is LSB-first: token index 0 is the least significant bit of
 * byte 0, token 8 is the least significant bit of byte 1, and so on.
 * A mask for a vocabulary of V tokens occupies ceil(V / 8) bytes.
 */

/** Whether the bit for `index` is set. Out-of-range indices are unset. */
export function getBit(mask: Uint8Array, index: number): boolean {
  if (index < 0) throw new RangeError(`bit index must be non-negative, got ${index}`);
  const byte = index >> 3;
  if (byte >= mask.length) return false;
  return (mask[byte]! & (1 << (index & 7))) !== 0;
}

/** Set the bit for `index` in place. */
export function setBit(mask: Uint8Array, index: number): void {
  const byte = index >> 3;
  if (index < 0 || byte >= mask.length) {
    throw new RangeError(`bit index ${index} out of range for ${mask.length} bytes`);
  }
  mask[byte]! |= 1 << (index & 7);
}

/** Number of set bits. */
export function popcount(mask: Uint8Array): number {
  let n = 0;
  for (let i = 0; i < mask.length; i++) {
    let b = mask[i]!;
    while (b) {
      b &= b - 1;
      n++;
    }
  }
  return n;
}

/** All set token indices below `vocabSize`, ascending. */
export function toTokenIds(mask: Uint8Array, vocabSize: number): number[] {
  const out: number[] = [];
  for (let i = 0; i < vocabSize; i++) {
    if (getBit(mask, i)) out.push(i);
  }
  return out;
}

/** Pack a set of token indices into a fresh bitset for `vocabSize` tokens. */
export function fromTokenIds(tokens: Iterable<number>, vocabSize: number): Uint8Array {
  const mask = new Uint8Array((vocabSize + 7) >> 3);
  for (const t of tokens) {
    if (t < 0 || t >= vocabSize) {
      throw new RangeError(`token index ${t} out of range for vocabulary of ${vocabSize}`);
    }
    setBit(mask, t);
  }
  return mask;
}

/** Byte-for-byte equality. */
export function bitsetEquals(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}

/** Decode the service's base64 mask payload. */
export function decodeBase64(b64: string): Uint8Array {
  return new Uint8Array(Buffer.from(b64, "base64"));
}
