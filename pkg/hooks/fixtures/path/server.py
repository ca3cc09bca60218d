"""Intentionally vulnerable fixture: tool argument concatenated into a file
path with no canonicalization. A staged secret outside the docs directory is
reachable through `..` traversal."""
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "_lib"))
from stdio_rpc import serve, string_tool

_root = Path(tempfile.mkdtemp(prefix="fixture-path-"))
DOCS_DIR = _root / "docs"
DOCS_DIR.mkdir()
(DOCS_DIR / "readme.txt").write_text("README-CONTENT-V1\n")
secret_dir = _root / "secret"
secret_dir.mkdir()
(secret_dir / "flag.txt").write_text("STAGED-SECRET-OUTSIDE-DOCS\n")


def read_file(relpath):
    full = str(DOCS_DIR) + "/" + relpath
    try:
        with open(full) as fh:
            return fh.read()
    except OSError as exc:
        return "read error: %s" % exc.__class__.__name__


if __name__ == "__main__":
    serve(
        "fixture-path",
        [string_tool("read_file", "Read a document from the docs directory.", "path")],
        {"read_file": lambda args: read_file(args["path"])},
    )
