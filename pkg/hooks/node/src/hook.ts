/**
 * Runtime sink interposition for Node targets.
 *
 * Preload with `node --require <dist/hook.cjs> server.js`. Reads the
 * instrumentation manifest named by $VIPER_MANIFEST and intercepts module
 * loading: when a listed module is required, its listed callees are wrapped
 * so every delegated call appends one JSONL oracle event to
 * $VIPER_ORACLE_OUT before delegating with unmodified arguments (so the
 * event exists before a promise-returning sink resolves).
 *
 * Without both environment variables the shim is inert. Event-write
 * failures are swallowed: the target must never break.
 */
import * as fs from 'fs';
import * as path from 'path';

const MANIFEST_ENV = 'VIPER_MANIFEST';
const ORACLE_ENV = 'VIPER_ORACLE_OUT';
const PREVIEW_CAP = 2048;

interface SinkSpec {
  language: string;
  vuln_class: string;
  module_path: string;
  callee: string;
  sink_arg_positions: number[];
}

function log(message: string): void {
  try {
    process.stderr.write(`[viper-hook] ${message}\n`);
  } catch {
    /* ignore */
  }
}

function preview(args: unknown[]): string {
  const parts = args.map((value) => {
    try {
      if (typeof value === 'string') return value;
      if (Array.isArray(value)) return value.map(String).join(' ');
      if (value === null || value === undefined) return String(value);
      if (typeof value === 'object') return JSON.stringify(value);
      return String(value);
    } catch {
      return `<${typeof value}>`;
    }
  });
  return parts.join(' ').slice(0, PREVIEW_CAP);
}

function callerLocation(): { fn: string | null; line: number | null } {
  const stack = (new Error().stack || '').split('\n').slice(1);
  for (const frame of stack) {
    if (frame.includes('hook.cjs') || frame.includes('hook.ts')) continue;
    if (frame.includes('node:internal') || frame.includes('internal/modules')) continue;
    let match = frame.match(/at\s+(.+?)\s+\((.*):(\d+):\d+\)$/);
    if (match) {
      const fn = match[1] === 'Object.<anonymous>' ? null : match[1];
      return { fn, line: parseInt(match[3], 10) };
    }
    match = frame.match(/at\s+(.*):(\d+):\d+$/);
    if (match) {
      return { fn: null, line: parseInt(match[2], 10) };
    }
  }
  return { fn: null, line: null };
}

function writeEvent(oracleOut: string, sink: string, category: string, args: unknown[]): void {
  const location = callerLocation();
  const record = {
    ts: Date.now() / 1000,
    pid: process.pid,
    sink,
    category,
    args_preview: preview(args),
    enclosing_function: location.fn,
    line: location.line,
  };
  try {
    // Single appendFileSync call keeps the line intact.
    fs.appendFileSync(oracleOut, JSON.stringify(record) + '\n');
  } catch {
    /* target must never break */
  }
}

type AnyFn = (...args: unknown[]) => unknown;

function wrap(original: AnyFn, sink: string, category: string, oracleOut: string): AnyFn {
  const hooked = function (this: unknown, ...args: unknown[]): unknown {
    writeEvent(oracleOut, sink, category, args);
    return original.apply(this, args);
  };
  Object.defineProperty(hooked, 'name', { value: original.name || sink });
  return hooked;
}

export function install(manifestPath?: string, oracleOut?: string): number {
  const manifestFile = manifestPath ?? process.env[MANIFEST_ENV];
  const eventsFile = oracleOut ?? process.env[ORACLE_ENV];
  if (!manifestFile || !eventsFile) return 0;

  let sinks: SinkSpec[];
  try {
    const manifest = JSON.parse(fs.readFileSync(manifestFile, 'utf-8'));
    sinks = (manifest.sinks || []).filter((s: SinkSpec) => s.language === 'js');
  } catch (err) {
    log(`manifest unreadable (${err}); shim inert`);
    return 0;
  }

  const byModule = new Map<string, SinkSpec[]>();
  for (const spec of sinks) {
    if (spec.module_path === '*') continue; // bare-name specs are static-only
    const existing = byModule.get(spec.module_path) || [];
    existing.push(spec);
    byModule.set(spec.module_path, existing);
  }
  if (byModule.size === 0) return 0;

  // eslint-disable-next-line @typescript-eslint/no-var-requires
  const Module = require('module');
  const originalRequire = Module.prototype.require;
  const patched = new WeakSet<object>();
  const wrappedDefaults = new Map<AnyFn, AnyFn>();
  let installed = 0;

  function wrapExports(moduleName: string, exports: unknown): unknown {
    const specs = byModule.get(moduleName);
    if (!specs) return exports;
    // Default-export sinks: the wrapped function replaces the export.
    const defaultSpecs = specs.filter((s) => s.callee === '*');
    if (defaultSpecs.length > 0 && typeof exports === 'function') {
      const original = exports as AnyFn;
      if (!wrappedDefaults.has(original)) {
        wrappedDefaults.set(
          original,
          wrap(original, moduleName, defaultSpecs[0].vuln_class, eventsFile as string),
        );
        installed += 1;
      }
      return wrappedDefaults.get(original);
    }
    if (typeof exports !== 'object' || exports === null) return exports;
    if (patched.has(exports)) return exports;
    patched.add(exports);
    const container = exports as Record<string, unknown>;
    for (const spec of specs) {
      if (spec.callee === '*') continue;
      const original = container[spec.callee];
      if (typeof original !== 'function') {
        log(`cannot resolve ${moduleName}.${spec.callee}`);
        continue;
      }
      try {
        container[spec.callee] = wrap(
          original as AnyFn,
          `${moduleName}.${spec.callee}`,
          spec.vuln_class,
          eventsFile as string,
        );
        installed += 1;
      } catch (err) {
        log(`cannot wrap ${moduleName}.${spec.callee}: ${err}`);
      }
    }
    return exports;
  }

  Module.prototype.require = function (id: string, ...rest: unknown[]) {
    const exports = originalRequire.apply(this, [id, ...rest]);
    const normalized = id.startsWith('node:') ? id.slice(5) : id;
    return wrapExports(normalized, exports);
  };
  log(`intercepting ${byModule.size} module(s) from the manifest`);

  // Modules loaded before the patch (including by this file) are wrapped
  // in place through the require cache.
  for (const key of Object.keys(require.cache)) {
    const cached = require.cache[key];
    if (!cached) continue;
    const base = path.basename(key).replace(/\.(c?js|json)$/, '');
    if (byModule.has(base)) {
      wrapExports(base, cached.exports);
    }
  }

  return installed;
}

install();
