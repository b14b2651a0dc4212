"""In-process CLI invocation helpers shared by the CLI and acceptance tests."""

from __future__ import annotations

import io
from contextlib import redirect_stderr, redirect_stdout

from qiblanav import cli


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    try:
        with redirect_stdout(out), redirect_stderr(err):
            code = cli.main(argv)
    except SystemExit as exc:  # argparse usage errors exit via SystemExit
        code = exc.code if isinstance(exc.code, int) else 0
    return code, out.getvalue(), err.getvalue()
