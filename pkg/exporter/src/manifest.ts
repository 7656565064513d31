/**
 * Manifest loaders and prompt templates. Every parse failure names the file
 * and, where it exists, the line.
 */
import * as fs from 'fs';

export class ManifestError extends Error {
  file: string;
  line?: number;

  constructor(message: string, file: string, line?: number) {
    super(line === undefined ? `${file}: ${message}` : `${file}:${line}: ${message}`);
    this.name = 'ManifestError';
    this.file = file;
    this.line = line;
  }
}

export interface TextItem {
  key: string;
  text: string;
}

export interface ImageItem {
  key: string;
  path: string;
}

export const TEMPLATE_SLOT = '{}';

/** A template must contain exactly one `{}` slot. */
export function validateTemplate(template: string): void {
  const slots = template.split(TEMPLATE_SLOT).length - 1;
  if (slots !== 1) {
    throw new Error(
      `template must contain exactly one "${TEMPLATE_SLOT}" slot, found ${slots}`
    );
  }
}

export function fillTemplate(template: string, item: string): string {
  validateTemplate(template);
  return template.replace(TEMPLATE_SLOT, item);
}

function parseLines(file: string): Array<{ line: number; obj: unknown }> {
  const rows: Array<{ line: number; obj: unknown }> = [];
  const raw = fs.readFileSync(file, 'utf8');
  raw.split('\n').forEach((text, index) => {
    if (text.trim() === '') {
      return;
    }
    let obj: unknown;
    try {
      obj = JSON.parse(text);
    } catch (err) {
      throw new ManifestError(`invalid JSON: ${(err as Error).message}`, file, index + 1);
    }
    rows.push({ line: index + 1, obj });
  });
  return rows;
}

/** Text manifest: JSONL of {"key": ..., "text": ...}. */
export function loadTextManifest(file: string): TextItem[] {
  const items: TextItem[] = [];
  const seen = new Set<string>();
  for (const { line, obj } of parseLines(file)) {
    const rec = obj as Record<string, unknown>;
    if (typeof rec !== 'object' || rec === null || Array.isArray(rec)) {
      throw new ManifestError('entry must be an object', file, line);
    }
    if (typeof rec.key !== 'string' || typeof rec.text !== 'string') {
      throw new ManifestError('entry needs string "key" and "text"', file, line);
    }
    if (seen.has(rec.key)) {
      throw new ManifestError(`duplicate key ${JSON.stringify(rec.key)}`, file, line);
    }
    seen.add(rec.key);
    items.push({ key: rec.key, text: rec.text });
  }
  if (items.length === 0) {
    throw new ManifestError('manifest has no entries', file);
  }
  return items;
}

/** Image manifest: JSONL of {"key": ..., "path": ...}, paths relative to the manifest. */
export function loadImageManifest(file: string): ImageItem[] {
  const items: ImageItem[] = [];
  const seen = new Set<string>();
  for (const { line, obj } of parseLines(file)) {
    const rec = obj as Record<string, unknown>;
    if (typeof rec !== 'object' || rec === null || Array.isArray(rec)) {
      throw new ManifestError('entry must be an object', file, line);
    }
    if (typeof rec.key !== 'string' || typeof rec.path !== 'string' || rec.path === '') {
      throw new ManifestError('entry needs string "key" and non-empty "path"', file, line);
    }
    if (seen.has(rec.key)) {
      throw new ManifestError(`duplicate key ${JSON.stringify(rec.key)}`, file, line);
    }
    seen.add(rec.key);
    items.push({ key: rec.key, path: rec.path });
  }
  if (items.length === 0) {
    throw new ManifestError('manifest has no entries', file);
  }
  return items;
}
