"""casbench-shim: the in-sandbox worker process.

Reads one execution request from stdin, runs the guest script under resource
limits with imports restricted to an allowlist, and emits exactly one report
on the designated file descriptor. Also home to the CAS-backed answer
equivalence oracle that escalation scripts import.
"""

__version__ = "0.1.0"
