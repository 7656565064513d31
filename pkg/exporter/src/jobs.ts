/**
 * Export jobs: batch-embed a manifest into a REMB store.
 *
 * Jobs are all-or-nothing: every vector is computed before the store is
 * opened, and the write itself is atomic, so a failing item never leaves a
 * partial store behind.
 */
import * as fs from 'fs';
import * as path from 'path';

import { embedImageBytes, embedText, loadModel, Model } from './encoder.js';
import { fillTemplate, loadImageManifest, loadTextManifest, validateTemplate } from './manifest.js';
import { StoreEntry, writeStore } from './remb.js';

export const ROOT_KEY = '';
export const DEFAULT_BATCH = 64;

export interface ExportJob {
  model: string;
  manifest: string;
  out: string;
  template?: string;
  batch?: number;
  /** Text jobs include the empty-string root by default; set false to drop it. */
  includeRoot?: boolean;
}

export interface ExportResult {
  out: string;
  records: number;
  dim: number;
}

export function* batches<T>(items: T[], size: number): Generator<T[]> {
  if (size < 1) {
    throw new Error(`batch size must be >= 1, got ${size}`);
  }
  for (let i = 0; i < items.length; i += size) {
    yield items.slice(i, i + size);
  }
}

function finishJob(job: ExportJob, entries: StoreEntry[], model: Model): ExportResult {
  writeStore(job.out, entries, 'f32');
  return { out: job.out, records: entries.length, dim: model.dim };
}

/**
 * Embed every manifest text under its key. The root key "" is embedded from
 * the raw empty string (never through the template) unless the manifest
 * already provides it or includeRoot is false.
 */
export function exportTexts(job: ExportJob): ExportResult {
  const model = loadModel(job.model);
  if (job.template !== undefined) {
    validateTemplate(job.template);
  }
  const items = loadTextManifest(job.manifest);

  const entries: StoreEntry[] = [];
  const hasExplicitRoot = items.some((item) => item.key === ROOT_KEY);
  if (job.includeRoot !== false && !hasExplicitRoot) {
    entries.push({ key: ROOT_KEY, values: embedText(model, '') });
  }
  for (const batch of batches(items, job.batch ?? DEFAULT_BATCH)) {
    for (const item of batch) {
      const text =
        job.template === undefined ? item.text : fillTemplate(job.template, item.text);
      entries.push({ key: item.key, values: embedText(model, text) });
    }
  }
  return finishJob(job, entries, model);
}

/** Embed every manifest image from its file bytes, content-addressed. */
export function exportImages(job: ExportJob): ExportResult {
  const model = loadModel(job.model);
  const items = loadImageManifest(job.manifest);
  const baseDir = path.dirname(job.manifest);

  const entries: StoreEntry[] = [];
  for (const batch of batches(items, job.batch ?? DEFAULT_BATCH)) {
    for (const item of batch) {
      const resolved = path.isAbsolute(item.path)
        ? item.path
        : path.join(baseDir, item.path);
      let bytes: Buffer;
      try {
        bytes = fs.readFileSync(resolved);
      } catch {
        throw new Error(
          `cannot read image ${resolved} (key ${JSON.stringify(item.key)}); aborting export`
        );
      }
      entries.push({ key: item.key, values: embedImageBytes(model, bytes) });
    }
  }
  return finishJob(job, entries, model);
}
