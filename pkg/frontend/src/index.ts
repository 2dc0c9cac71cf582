export {
  bitsetEquals,
  decodeBase64,
  fromTokenIds,
  getBit,
  popcount,
  setBit,
  toTokenIds,
} from "./bitset.js";
export {
  KgDecodeClient,
  ServiceError,
  SessionHandle,
} from "./client.js";
export type {
  Answer,
  DecodeOptions,
  HealthInfo,
  MaskMode,
  PackedMask,
  QuestionResult,
  RankedQuery,
} from "./client.js";
export {
  LogitsProcessorList,
  PackedMaskProcessor,
  argmax,
} from "./logits-processor.js";
export type { LogitsProcessor } from "./logits-processor.js";
export { VocabularyView } from "./tokens.js";
