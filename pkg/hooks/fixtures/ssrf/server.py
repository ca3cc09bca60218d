"""Intentionally vulnerable fixture: tool argument becomes an outbound
request URL. Hermetic: the only reachable host is a loopback echo listener
the fixture starts itself; relative inputs resolve against it."""
import sys
import threading
import urllib.request
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "_lib"))
from stdio_rpc import serve, string_tool


class _EchoHandler(BaseHTTPRequestHandler):
    def do_GET(self):
        body = ("LOOPBACK-ECHO " + self.path).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


_listener = HTTPServer(("127.0.0.1", 0), _EchoHandler)
threading.Thread(target=_listener.serve_forever, daemon=True).start()
BASE_URL = "http://127.0.0.1:%d" % _listener.server_address[1]


def fetch_url(url):
    if url.startswith("/"):
        url = BASE_URL + url
    with urllib.request.urlopen(url, timeout=5) as resp:
        return resp.read().decode()


if __name__ == "__main__":
    serve(
        "fixture-ssrf",
        [
            string_tool(
                "fetch_url",
                "Fetch a URL; relative paths resolve against the fixture's "
                "own loopback probe endpoint.",
                "url",
            )
        ],
        {"fetch_url": lambda args: fetch_url(args["url"])},
    )
