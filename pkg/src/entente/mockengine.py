"""Scriptable stand-in for a JavaScript engine binary.

A mock engine reads the test file it is given and obeys the first directive
comment addressed to it::

    //!mock <engine-name> <behavior>

Behaviors:
    pass [text]            exit 0, optionally printing text
    assert-fail [message]  print the assertion sentinel, exit nonzero
    error <Kind> [message] print "<Kind>: <message>" on stderr, exit nonzero
    crash [signal]         die by signal (default SIGABRT)
    timeout [seconds]      sleep (default well past any harness budget)
    oom                    print an out-of-memory banner, exit nonzero
    exit <code>            exit with the given code, no output

``*`` as engine name matches any engine without a specific directive. With
no directive at all the mock passes, so probe programs work.

A conditional form scripts mutation-triggered divergence::

    //!mock-if <needle> <engine-name> <behavior>

It applies only when <needle> occurs somewhere outside the directive lines,
e.g. after a fuzzer injects that token. Conditionals are checked before
unconditional directives.

In ``--parse-only`` mode directives are ignored and the bundled
well-formedness checker decides between exit 0 and a SyntaxError line.
"""

from __future__ import annotations

import os
import signal as signalmod
import sys
import time

SENTINEL_PREFIX = "ENTENTE_ASSERT_FAIL:"
DIRECTIVE_PREFIX = "//!mock"
CONDITIONAL_PREFIX = "//!mock-if"


def parse_directives(text: str) -> tuple[dict[str, list[str]], list[tuple[str, str, list[str]]]]:
    """Returns (unconditional table, conditional list). First directive per
    engine name wins; conditionals keep declaration order."""
    table: dict[str, list[str]] = {}
    conditionals: list[tuple[str, str, list[str]]] = []
    body_lines: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith(CONDITIONAL_PREFIX):
            parts = stripped[len(CONDITIONAL_PREFIX):].split()
            if len(parts) >= 3:
                conditionals.append((parts[0], parts[1], parts[2:]))
            continue
        if stripped.startswith(DIRECTIVE_PREFIX):
            parts = stripped[len(DIRECTIVE_PREFIX):].split()
            if len(parts) >= 2:
                table.setdefault(parts[0], parts[1:])
            continue
        body_lines.append(line)
    body = "\n".join(body_lines)
    active = [
        (needle, engine, behavior)
        for needle, engine, behavior in conditionals
        if needle in body
    ]
    return table, active


def _run_parse_only(text: str) -> int:
    from .jstokens import check_source

    verdict = check_source(text)
    if verdict.ok:
        return 0
    line = f" (line {verdict.line})" if verdict.line else ""
    sys.stderr.write(f"SyntaxError: {verdict.reason}{line}\n")
    return 3


def _act(behavior: list[str]) -> int:
    action, args = behavior[0], behavior[1:]
    if action == "pass":
        if args:
            sys.stdout.write(" ".join(args) + "\n")
        return 0
    if action == "assert-fail":
        message = " ".join(args) if args else "assertion failed"
        sys.stdout.write(f"{SENTINEL_PREFIX} {message}\n")
        sys.stdout.flush()
        sys.stderr.write(f"Error: {SENTINEL_PREFIX} {message}\n")
        return 3
    if action == "error":
        kind = args[0] if args else "Error"
        message = " ".join(args[1:])
        sys.stderr.write(f"{kind}: {message}\n")
        return 3
    if action == "crash":
        sig = int(args[0]) if args else signalmod.SIGABRT
        sys.stdout.flush()
        sys.stderr.flush()
        os.kill(os.getpid(), sig)
        time.sleep(10)  # pragma: no cover - waiting for the signal
        return 1
    if action == "timeout":
        time.sleep(float(args[0]) if args else 3600.0)
        return 0
    if action == "oom":
        sys.stderr.write("FATAL ERROR: JavaScript heap out of memory\n")
        return 5
    if action == "exit":
        return int(args[0]) if args else 1
    sys.stderr.write(f"mock engine: unknown behavior {action!r}\n")
    return 70


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    name = "mock"
    parse_only = False
    path = None
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg == "--name":
            i += 1
            name = argv[i]
        elif arg.startswith("--name="):
            name = arg.split("=", 1)[1]
        elif arg == "--parse-only":
            parse_only = True
        else:
            path = arg
        i += 1
    if path is None:
        sys.stderr.write("mock engine: no input file\n")
        return 64
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        sys.stderr.write(f"mock engine: {exc}\n")
        return 66

    if parse_only:
        return _run_parse_only(text)

    table, conditionals = parse_directives(text)
    behavior = None
    for _, engine, conditional_behavior in conditionals:
        if engine in (name, "*"):
            behavior = conditional_behavior
            break
    if behavior is None:
        behavior = table.get(name) or table.get("*") or ["pass"]
    return _act(behavior)


if __name__ == "__main__":
    sys.exit(main())
