export {
  FORMAT_VERSION,
  HEADER_SIZE,
  MAGIC,
  MAX_KEY_BYTES,
  StoreFormatError,
  packStore,
  readStore,
  writeStore,
} from './remb.js';
export type { Scalar, StoreEntry } from './remb.js';
export {
  ModelError,
  averageAndNormalize,
  embedImageBytes,
  embedImageRef,
  embedText,
  loadModel,
} from './encoder.js';
export type { Model } from './encoder.js';
export {
  ManifestError,
  TEMPLATE_SLOT,
  fillTemplate,
  loadImageManifest,
  loadTextManifest,
  validateTemplate,
} from './manifest.js';
export type { ImageItem, TextItem } from './manifest.js';
export { DEFAULT_BATCH, ROOT_KEY, batches, exportImages, exportTexts } from './jobs.js';
export type { ExportJob, ExportResult } from './jobs.js';
export {
  BENCHMARK_NAMES,
  DEFAULT_LEXICAL_TEMPLATE,
  PROMPT_ENSEMBLE,
  exportBenchmark,
} from './benchmark.js';
export type { BenchmarkName, BenchmarkOptions, BenchmarkResult } from './benchmark.js';
export { main } from './cli.js';
