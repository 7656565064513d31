#!/usr/bin/env node
/**
 * Command line: export-texts / export-images / export-benchmark.
 *
 * Exit codes: 0 success, 1 export failure, 2 usage error.
 */
import { pathToFileURL } from 'url';

import { BENCHMARK_NAMES, exportBenchmark } from './benchmark.js';
import { exportImages, exportTexts } from './jobs.js';

const USAGE = `usage:
  radialign-export export-texts  --model <id> --manifest <file> --out <store> [--template <tpl>] [--batch <n>] [--no-root]
  radialign-export export-images --model <id> --manifest <file> --out <store> [--batch <n>]
  radialign-export export-benchmark <name> --model <id> --manifest <file> --out <prefix> [--template <tpl>] [--batch <n>]

benchmarks: ${BENCHMARK_NAMES.join(', ')}
models: hash-<dim> (deterministic reference backend)`;

interface Parsed {
  command: string;
  positional: string[];
  flags: Map<string, string | true>;
}

class UsageError extends Error {}

const VALUE_FLAGS = new Set(['--model', '--manifest', '--out', '--template', '--batch']);
const BOOL_FLAGS = new Set(['--no-root']);

function parseArgv(argv: string[]): Parsed {
  if (argv.length === 0) {
    throw new UsageError('missing command');
  }
  const [command, ...rest] = argv;
  const positional: string[] = [];
  const flags = new Map<string, string | true>();
  for (let i = 0; i < rest.length; i++) {
    const arg = rest[i];
    if (VALUE_FLAGS.has(arg)) {
      const value = rest[i + 1];
      if (value === undefined) {
        throw new UsageError(`${arg} needs a value`);
      }
      flags.set(arg, value);
      i++;
    } else if (BOOL_FLAGS.has(arg)) {
      flags.set(arg, true);
    } else if (arg.startsWith('--')) {
      throw new UsageError(`unknown flag ${arg}`);
    } else {
      positional.push(arg);
    }
  }
  return { command, positional, flags };
}

function requireFlag(parsed: Parsed, name: string): string {
  const value = parsed.flags.get(name);
  if (typeof value !== 'string') {
    throw new UsageError(`${name} is required`);
  }
  return value;
}

function batchOf(parsed: Parsed): number | undefined {
  const raw = parsed.flags.get('--batch');
  if (raw === undefined) {
    return undefined;
  }
  const n = Number(raw);
  if (!Number.isInteger(n) || n < 1) {
    throw new UsageError(`--batch must be a positive integer, got ${String(raw)}`);
  }
  return n;
}

export function main(argv: string[]): number {
  try {
    const parsed = parseArgv(argv);
    const job = () => ({
      model: requireFlag(parsed, '--model'),
      manifest: requireFlag(parsed, '--manifest'),
      out: requireFlag(parsed, '--out'),
      template: parsed.flags.get('--template') as string | undefined,
      batch: batchOf(parsed),
    });

    if (parsed.command === 'export-texts') {
      if (parsed.positional.length > 0) {
        throw new UsageError('export-texts takes no positional arguments');
      }
      const result = exportTexts({ ...job(), includeRoot: !parsed.flags.has('--no-root') });
      console.log(`wrote ${result.records} records (dim ${result.dim}) to ${result.out}`);
      return 0;
    }
    if (parsed.command === 'export-images') {
      if (parsed.positional.length > 0) {
        throw new UsageError('export-images takes no positional arguments');
      }
      const result = exportImages(job());
      console.log(`wrote ${result.records} records (dim ${result.dim}) to ${result.out}`);
      return 0;
    }
    if (parsed.command === 'export-benchmark') {
      if (parsed.positional.length !== 1) {
        throw new UsageError('export-benchmark needs exactly one benchmark name');
      }
      const name = parsed.positional[0];
      if (!(BENCHMARK_NAMES as string[]).includes(name)) {
        throw new UsageError(
          `unknown benchmark ${JSON.stringify(name)}; expected one of ${BENCHMARK_NAMES.join(', ')}`
        );
      }
      const result = exportBenchmark(name, job());
      console.log(`wrote ${result.records} records (dim ${result.dim}) to ${result.store}`);
      console.log(`wrote task file ${result.taskFile}`);
      return 0;
    }
    throw new UsageError(`unknown command ${JSON.stringify(parsed.command)}`);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const isDirectRun =
  typeof process.argv[1] === 'string' &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
