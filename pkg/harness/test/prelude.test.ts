/**
 * Prelude contract tests, run against a real engine (node).
 *
 * Each case composes prelude.js with a snippet, executes it in a fresh
 * process and checks the observable protocol: the sentinel line, the exit
 * status, and anything printed. The sentinel prefix is frozen; the outcome
 * classifier on the other side of the pipe keys on it byte for byte.
 */

import { test } from "node:test";
import assert from "node:assert/strict";
import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";

const SENTINEL = "ENTENTE_ASSERT_FAIL:";
// Compiled tests run from dist-test/, one level below the package root.
const PRELUDE_PATH = join(__dirname, "..", "prelude.js");
const PRELUDE = readFileSync(PRELUDE_PATH, "utf8");

interface RunResult {
  stdout: string;
  stderr: string;
  status: number | null;
}

function runSnippet(snippet: string): RunResult {
  const dir = mkdtempSync(join(tmpdir(), "entente-harness-"));
  const file = join(dir, "case.js");
  writeFileSync(file, PRELUDE + "\n" + snippet, "utf8");
  const proc = spawnSync("node", [file], { encoding: "utf8", timeout: 20000 });
  return { stdout: proc.stdout, stderr: proc.stderr, status: proc.status };
}

function sentinelLines(result: RunResult): string[] {
  return (result.stdout + result.stderr)
    .split("\n")
    .filter((line) => line.startsWith(SENTINEL));
}

test("prelude alone runs cleanly and prints nothing", () => {
  const result = runSnippet("");
  assert.equal(result.status, 0);
  assert.equal(result.stdout, "");
});

test("prelude parses as plain script (node --check)", () => {
  execFileSync("node", ["--check", PRELUDE_PATH]);
});

test("passing assertions stay silent", () => {
  const result = runSnippet(
    [
      "assert(1 == 1);",
      "assert(true, 'never shown');",
      "assertEq('a' + 'b', 'ab');",
      "assertEqArray([1, 2], [1, 2]);",
      "assertThrowsInstanceOf(function () { throw new TypeError('t'); }, TypeError);",
    ].join("\n")
  );
  assert.equal(result.status, 0);
  assert.equal(sentinelLines(result).length, 0);
});

test("assert(false) emits exactly one sentinel line and exits nonzero", () => {
  const result = runSnippet("assert(false, 'boom');");
  assert.notEqual(result.status, 0);
  assert.equal(result.stdout, SENTINEL + " boom\n");
});

test("assert without message uses a default", () => {
  const result = runSnippet("assert(false);");
  assert.equal(result.stdout, SENTINEL + " assertion failed\n");
  assert.notEqual(result.status, 0);
});

test("assertEq uses SameValue: NaN equals NaN", () => {
  const result = runSnippet("assertEq(NaN, NaN);");
  assert.equal(result.status, 0);
});

test("assertEq uses SameValue: +0 and -0 differ", () => {
  const result = runSnippet("assertEq(0, -0);");
  assert.notEqual(result.status, 0);
  assert.equal(sentinelLines(result).length >= 1, true);
});

test("assertEq on arrays compares elementwise, recursively", () => {
  assert.equal(runSnippet("assertEq([1, [2, 3]], [1, [2, 3]]);").status, 0);
  assert.notEqual(runSnippet("assertEq([1, 2], [1, 2, 3]);").status, 0);
});

test("assertEq failure message names both values", () => {
  const result = runSnippet("assertEq(1, 2);");
  assert.match(result.stdout, /expected 2, got 1/);
});

test("assertEqArray rejects non-arrays and mismatches", () => {
  assert.notEqual(runSnippet("assertEqArray('nope', [1]);").status, 0);
  assert.notEqual(runSnippet("assertEqArray([1], [2]);").status, 0);
  assert.equal(runSnippet("assertEqArray([], []);").status, 0);
});

test("assertThrowsInstanceOf: wrong constructor fails", () => {
  const result = runSnippet(
    "assertThrowsInstanceOf(function () { throw new RangeError('r'); }, TypeError);"
  );
  assert.notEqual(result.status, 0);
  assert.equal(sentinelLines(result).length >= 1, true);
});

test("assertThrowsInstanceOf: no exception fails", () => {
  const result = runSnippet("assertThrowsInstanceOf(function () {}, TypeError);");
  assert.notEqual(result.status, 0);
});

test("print is aliased to a buffered logger when the shell lacks one", () => {
  const result = runSnippet("print('hello'); print(42);");
  assert.equal(result.status, 0);
  assert.equal(result.stdout, "hello\n42\n");
});

test("non-portable shell helpers are inert stubs", () => {
  const result = runSnippet(
    "drainMicrotasks();\nvar r = getPromiseResult({});\nassert(r === undefined);"
  );
  assert.equal(result.status, 0);
});

test("sentinel never appears in a passing run", () => {
  const result = runSnippet("print('all fine'); assert(1 === 1);");
  assert.equal(result.status, 0);
  assert.equal(sentinelLines(result).length, 0);
});

test("thrown assertion failures are not swallowed by try/catch-free tests", () => {
  // The throw after the sentinel must propagate so the engine exits nonzero.
  const result = runSnippet("assert(false, 'propagates'); print('unreachable');");
  assert.notEqual(result.status, 0);
  assert.doesNotMatch(result.stdout, /unreachable/);
});
