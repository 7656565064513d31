/**
 * REMB binary store format: the byte-exact contract with the evaluation
 * engine. Little-endian throughout.
 *
 * header (19 bytes): magic "REMB", u16 format version (1), u32 vector
 * dimension, u64 record count, u8 scalar tag (4 = float32, 8 = float64)
 * record: u16 key length, UTF-8 key bytes, dim * scalar_size float bytes
 */
import * as fs from 'fs';
import * as path from 'path';

export const MAGIC = 'REMB';
export const FORMAT_VERSION = 1;
export const HEADER_SIZE = 19;
export const MAX_KEY_BYTES = 0xffff;

export type Scalar = 'f32' | 'f64';

export interface StoreEntry {
  key: string;
  values: Float64Array;
}

export class StoreFormatError extends Error {
  offset: number;

  constructor(message: string, offset: number) {
    super(`${message} (byte offset ${offset})`);
    this.name = 'StoreFormatError';
    this.offset = offset;
  }
}

function scalarSize(scalar: Scalar): number {
  return scalar === 'f32' ? 4 : 8;
}

export function packStore(entries: StoreEntry[], scalar: Scalar = 'f32'): Buffer {
  if (entries.length === 0) {
    throw new Error('refusing to write an empty store');
  }
  const dim = entries[0].values.length;
  if (dim < 1) {
    throw new Error('vectors must have dimension >= 1');
  }
  const seen = new Set<string>();
  let total = HEADER_SIZE;
  for (const entry of entries) {
    if (entry.values.length !== dim) {
      throw new Error(
        `mixed dimensions: ${entry.values.length} vs ${dim} for key ${JSON.stringify(entry.key)}`
      );
    }
    if (seen.has(entry.key)) {
      throw new Error(`duplicate key ${JSON.stringify(entry.key)}`);
    }
    seen.add(entry.key);
    const keyBytes = Buffer.byteLength(entry.key, 'utf8');
    if (keyBytes > MAX_KEY_BYTES) {
      throw new Error(`key exceeds ${MAX_KEY_BYTES} UTF-8 bytes`);
    }
    total += 2 + keyBytes + dim * scalarSize(scalar);
  }

  const buf = Buffer.alloc(total);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt16LE(FORMAT_VERSION, 4);
  buf.writeUInt32LE(dim, 6);
  buf.writeBigUInt64LE(BigInt(entries.length), 10);
  buf.writeUInt8(scalarSize(scalar), 18);

  const view = new DataView(buf.buffer, buf.byteOffset, buf.length);
  let offset = HEADER_SIZE;
  for (const entry of entries) {
    const keyBytes = Buffer.byteLength(entry.key, 'utf8');
    buf.writeUInt16LE(keyBytes, offset);
    offset += 2;
    buf.write(entry.key, offset, 'utf8');
    offset += keyBytes;
    for (let i = 0; i < dim; i++) {
      if (scalar === 'f32') {
        view.setFloat32(offset, entry.values[i], true);
        offset += 4;
      } else {
        view.setFloat64(offset, entry.values[i], true);
        offset += 8;
      }
    }
  }
  return buf;
}

/** Write a store atomically: temp file in the target directory, then rename. */
export function writeStore(outPath: string, entries: StoreEntry[], scalar: Scalar = 'f32'): void {
  const payload = packStore(entries, scalar);
  const tmp = path.join(
    path.dirname(outPath),
    `.${path.basename(outPath)}.${process.pid}.tmp`
  );
  fs.writeFileSync(tmp, payload);
  try {
    fs.renameSync(tmp, outPath);
  } catch (err) {
    fs.rmSync(tmp, { force: true });
    throw err;
  }
}

/** Parse a store; every failure names the offending byte offset. */
export function readStore(filePath: string): StoreEntry[] {
  const buf = fs.readFileSync(filePath);
  if (buf.length < HEADER_SIZE) {
    throw new StoreFormatError('header truncated', buf.length);
  }
  if (buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new StoreFormatError('bad magic', 0);
  }
  const version = buf.readUInt16LE(4);
  if (version !== FORMAT_VERSION) {
    throw new StoreFormatError(`unsupported format version ${version}`, 4);
  }
  const dim = buf.readUInt32LE(6);
  if (dim < 1) {
    throw new StoreFormatError(`bad dimension ${dim}`, 6);
  }
  const count = buf.readBigUInt64LE(10);
  const tag = buf.readUInt8(18);
  if (tag !== 4 && tag !== 8) {
    throw new StoreFormatError(`bad scalar tag ${tag}`, 18);
  }
  const itemSize = tag;
  const view = new DataView(buf.buffer, buf.byteOffset, buf.length);
  const decoder = new TextDecoder('utf-8', { fatal: true });

  const entries: StoreEntry[] = [];
  const seen = new Set<string>();
  let offset = HEADER_SIZE;
  for (let rec = 0n; rec < count; rec++) {
    const recordStart = offset;
    if (offset + 2 > buf.length) {
      throw new StoreFormatError('record truncated in key length', offset);
    }
    const keyLen = buf.readUInt16LE(offset);
    offset += 2;
    if (offset + keyLen > buf.length) {
      throw new StoreFormatError('record truncated in key', offset);
    }
    let key: string;
    try {
      key = decoder.decode(buf.subarray(offset, offset + keyLen));
    } catch {
      throw new StoreFormatError('key is not valid UTF-8', offset);
    }
    offset += keyLen;
    if (offset + dim * itemSize > buf.length) {
      throw new StoreFormatError('record truncated in payload', offset);
    }
    const values = new Float64Array(dim);
    for (let i = 0; i < dim; i++) {
      values[i] =
        tag === 4 ? view.getFloat32(offset, true) : view.getFloat64(offset, true);
      offset += itemSize;
    }
    if (seen.has(key)) {
      throw new StoreFormatError(`duplicate key ${JSON.stringify(key)}`, recordStart);
    }
    seen.add(key);
    entries.push({ key, values });
  }
  if (offset !== buf.length) {
    throw new StoreFormatError(`${buf.length - offset} trailing byte(s)`, offset);
  }
  return entries;
}
