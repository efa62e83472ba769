"""A scripted local chat-completion server for backend tests."""
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubServer:
    """Each POST pops the next scripted reply: (status, body, headers) or ("sleep", seconds)."""

    def __init__(self, script=None, default_text="utility: 1.0"):
        self.script = list(script or [])
        self.default_text = default_text
        self.requests = []
        self.lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *a):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with stub.lock:
                    stub.requests.append({"headers": dict(self.headers), "body": body, "path": self.path})
                    step = stub.script.pop(0) if stub.script else None
                if step and step[0] == "sleep":
                    time.sleep(step[1])
                    step = None
                if step is None:
                    content = stub.default_text
                    text = body["messages"][0]["content"] if body.get("messages") else ""
                    payload = {"choices": [{"message": {"role": "assistant", "content": content}}],
                               "echo_len": len(text)}
                    step = (200, json.dumps(payload), {})
                status, text, headers = step
                data = text.encode("utf-8")
                try:
                    self.send_response(status)
                    for k, v in headers.items():
                        self.send_header(k, v)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.httpd.daemon_threads = True
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()
