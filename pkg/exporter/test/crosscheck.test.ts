/**
 * End-to-end checks against the evaluation engine's CLI. Every bundle this
 * package exports must be directly consumable by `radialign`; these tests
 * shell out to it and are skipped when it is not installed.
 */
import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { afterEach, describe, expect, it } from 'vitest';

import { exportBenchmark } from '../src/benchmark.js';
import { exportTexts } from '../src/jobs.js';

const MODEL = 'hash-16';
const TIMEOUT = 60_000;

function engineAvailable(): boolean {
  try {
    execFileSync('radialign', ['--help'], { stdio: 'pipe' });
    return true;
  } catch {
    return false;
  }
}

const hasEngine = engineAvailable();

interface EngineRow {
  metric: string;
  item: string;
  value: unknown;
}

/** Run the engine CLI; a non-zero exit throws, so calling this asserts exit 0. */
function engine(args: string[]): EngineRow[] {
  const stdout = execFileSync('radialign', [...args, '--format', 'structured'], {
    encoding: 'utf8',
    stdio: ['ignore', 'pipe', 'pipe'],
  });
  return stdout
    .trim()
    .split('\n')
    .map((line) => JSON.parse(line) as EngineRow);
}

function row(rows: EngineRow[], metric: string, item: string): EngineRow {
  const found = rows.find((r) => r.metric === metric && r.item === item);
  expect(found, `no row for ${metric}/${item}`).toBeDefined();
  return found!;
}

const tmpDirs: string[] = [];

function tmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'xcheck-'));
  tmpDirs.push(dir);
  return dir;
}

afterEach(() => {
  while (tmpDirs.length > 0) {
    fs.rmSync(tmpDirs.pop()!, { recursive: true, force: true });
  }
});

function cap(key: string): { text: string; key: string } {
  return { text: `caption text for ${key}`, key };
}

describe.skipIf(!hasEngine)('evaluation engine consumes exported bundles', () => {
  it(
    'probe reads an exported text store',
    () => {
      const dir = tmpDir();
      const manifest = path.join(dir, 'texts.jsonl');
      fs.writeFileSync(
        manifest,
        [
          '{"key": "animal", "text": "an animal"}',
          '{"key": "dog", "text": "a dog"}',
        ].join('\n') + '\n'
      );
      const store = path.join(dir, 'texts.remb');
      exportTexts({ model: MODEL, manifest, out: store });

      const rows = engine(['probe', '--store', store, 'animal', 'dog']);
      for (const key of ['animal', 'dog']) {
        const dr = row(rows, 'd_r', key).value as number;
        expect(Number.isFinite(dr)).toBe(true);
        expect(dr).toBeGreaterThan(0);
        expect(Number.isFinite(row(rows, 'theta', key).value as number)).toBe(true);
      }
      expect(typeof row(rows, 'xi', 'animal->dog').value).toBe('number');
      expect(typeof row(rows, 'cone', 'animal->dog').value).toBe('boolean');
      expect(typeof row(rows, 'sim', 'animal~dog').value).toBe('number');
    },
    TIMEOUT
  );

  it(
    'eval hier and retrieve read a hierarchy-test bundle',
    () => {
      const dir = tmpDir();
      const manifest = path.join(dir, 'records.jsonl');
      const lines = [
        JSON.stringify({
          image_id: '1',
          image_key: 'img#1',
          positives: ['p1', 'p2', 'p3', 'p4'].map(cap),
          negatives: ['n1', 'n2', 'n3', 'n4'].map(cap),
        }),
        JSON.stringify({
          image_id: '2',
          image_key: 'img#2',
          positives: ['p1', 'p5', 'p6', 'p7'].map(cap),
        }),
      ];
      fs.writeFileSync(manifest, lines.join('\n') + '\n');
      const out = path.join(dir, 'hier');
      const result = exportBenchmark('hierarchy-test', { model: MODEL, manifest, out });

      const rows = engine([
        'eval', 'hier', '--store', result.store, '--data', result.taskFile,
      ]);
      for (const metric of ['precision', 'recall', 'tau_d']) {
        const mean = row(rows, metric, 'mean').value as number;
        expect(Number.isFinite(mean)).toBe(true);
        expect(row(rows, metric, '1')).toBeDefined();
        expect(row(rows, metric, '2')).toBeDefined();
      }

      const sweep = engine(['retrieve', '--store', result.store, 'img#1']);
      expect(typeof row(sweep, 'target', 'img#1').value).toBe('string');
      expect(sweep.some((r) => r.metric === 'hierarchy')).toBe(true);
    },
    TIMEOUT
  );

  it(
    'eval lexical reads a lexical bundle',
    () => {
      const dir = tmpDir();
      const manifest = path.join(dir, 'pairs.tsv');
      fs.writeFileSync(
        manifest,
        [
          'dog\tcat\t7.35\tN',
          'tree\trose\t4.10\tN',
          'car\tdog\t1.20\tN',
          'sun\tmoon\t6.70',
          'rose\tsun\t2.50',
        ].join('\n') + '\n'
      );
      const out = path.join(dir, 'lex');
      const result = exportBenchmark('lexical', { model: MODEL, manifest, out });

      const rows = engine([
        'eval', 'lexical', '--store', result.store, '--data', result.taskFile,
      ]);
      const all = row(rows, 'spearman', 'all').value as number;
      expect(Number.isFinite(all)).toBe(true);
      expect(Math.abs(all)).toBeLessThanOrEqual(1);
      expect(Number.isFinite(row(rows, 'spearman', 'pos:N').value as number)).toBe(true);
    },
    TIMEOUT
  );

  it(
    'eval pairs reads a label-task bundle',
    () => {
      const dir = tmpDir();
      const manifest = path.join(dir, 'labels.json');
      // five distinct labels give ten ordered pairs, enough for recall@5
      fs.writeFileSync(
        manifest,
        JSON.stringify({
          coarse_labels: ['animal', 'vehicle'],
          fine_labels: ['dog', 'cat', 'car'],
          images: [
            { key: 'i1', gt_coarse: 'animal', gt_fine: 'dog' },
            { key: 'i2', gt_coarse: 'animal', gt_fine: 'cat' },
            { key: 'i3', gt_coarse: 'vehicle', gt_fine: 'car' },
            { key: 'i4', gt_coarse: 'animal', gt_fine: 'dog' },
          ],
        })
      );
      const out = path.join(dir, 'cls');
      const result = exportBenchmark('label-task', { model: MODEL, manifest, out });

      const rows = engine([
        'eval', 'pairs', '--store', result.store, '--data', result.taskFile,
      ]);
      for (const k of [1, 5]) {
        const mean = row(rows, `pairs_recall@${k}`, 'mean').value as number;
        expect(mean).toBeGreaterThanOrEqual(0);
        expect(mean).toBeLessThanOrEqual(1);
      }
    },
    TIMEOUT
  );

  it(
    'eval knn reads a retrieval bundle',
    () => {
      const dir = tmpDir();
      const manifest = path.join(dir, 'retrieval.json');
      fs.writeFileSync(
        manifest,
        JSON.stringify({
          captions: ['c1', 'c2', 'c3', 'c4'].map(cap),
          queries: [
            { key: 'q1', gt: 'c2' },
            { key: 'q2', gt: 'c4' },
          ],
        })
      );
      const out = path.join(dir, 'ret');
      const result = exportBenchmark('coco-style-retrieval', { model: MODEL, manifest, out });

      const rows = engine([
        'eval', 'knn', '--store', result.store, '--data', result.taskFile, '--k', '1',
      ]);
      const recall = row(rows, 'recall@1', 'mean').value as number;
      expect(recall).toBeGreaterThanOrEqual(0);
      expect(recall).toBeLessThanOrEqual(1);
    },
    TIMEOUT
  );
});
