"""Protocol stub worker for sandbox tests.

Implements the shim wire protocol without any real guest runtime. The first
line of the incoming script is a directive choosing the behavior:

    #stub ok            -> ok report; remaining script lines become stdout
    #stub exc NAME MSG  -> failure report with exception NAME and a traceback
    #stub assert        -> failure report with an AssertionError
    #stub sleep S       -> sleep S seconds (never reports; forces timeout)
    #stub spawn-sleep S -> spawn a child sleeping S seconds, then sleep too
    #stub garbage       -> write non-JSON bytes on the report channel
    #stub noreport      -> exit 0 without writing a report
    #stub stderr TEXT   -> ok report; TEXT is written to real stderr first

Anything else reports ok with empty stdout.
"""

import json
import os
import subprocess
import sys
import time


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    report_fd = 3
    if "--report-fd" in argv:
        report_fd = int(argv[argv.index("--report-fd") + 1])

    line = sys.stdin.readline()
    request = json.loads(line)
    script = request["script"]
    lines = script.splitlines()
    directive = lines[0].strip() if lines else ""
    rest = "\n".join(lines[1:])

    def report(payload):
        os.write(report_fd, (json.dumps(payload) + "\n").encode("utf-8"))

    def done_ms():
        return 7  # fixed so replayed runs serialize byte-identically

    if directive.startswith("#stub exc"):
        parts = directive.split(" ", 3)
        exc_name = parts[2] if len(parts) > 2 else "RuntimeError"
        message = parts[3] if len(parts) > 3 else "stub failure"
        tb = (
            "Traceback (most recent call last):\n"
            '  File "<guest>", line 1, in <module>\n'
            f"{exc_name}: {message}"
        )
        report(
            {"ok": False, "exc": exc_name, "tb": tb, "stdout": "", "duration_ms": done_ms()}
        )
        return 0
    if directive.startswith("#stub assert"):
        tb = (
            "Traceback (most recent call last):\n"
            '  File "<guest>", line 9, in <module>\n'
            "AssertionError"
        )
        report(
            {
                "ok": False,
                "exc": "AssertionError",
                "tb": tb,
                "stdout": "",
                "duration_ms": done_ms(),
            }
        )
        return 0
    if directive.startswith("#stub sleep"):
        time.sleep(float(directive.split()[2]))
        return 0
    if directive.startswith("#stub spawn-sleep"):
        seconds = directive.split()[2]
        subprocess.Popen([sys.executable, "-c", f"import time; time.sleep({seconds})"])
        time.sleep(float(seconds))
        return 0
    if directive.startswith("#stub garbage"):
        os.write(report_fd, b"this is not a shim report\n")
        return 0
    if directive.startswith("#stub noreport"):
        return 0
    if directive.startswith("#stub stderr"):
        sys.stderr.write(directive.split(" ", 2)[2] + "\n")
        sys.stderr.flush()
        report({"ok": True, "exc": None, "tb": None, "stdout": rest, "duration_ms": done_ms()})
        return 0
    if directive.startswith("#stub ok"):
        stdout = rest + ("\n" if rest else "")
        report({"ok": True, "exc": None, "tb": None, "stdout": stdout, "duration_ms": done_ms()})
        return 0
    report({"ok": True, "exc": None, "tb": None, "stdout": "", "duration_ms": done_ms()})
    return 0


if __name__ == "__main__":
    sys.exit(main())
