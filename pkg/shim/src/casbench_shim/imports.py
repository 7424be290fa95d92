"""Import restriction for guest scripts.

The allowlist covers the CAS plus pure-computation standard modules. It is
enforced by hooking the import machinery rather than by scanning source, so
dynamic imports are caught too. Anything outside the list surfaces as an
ordinary ImportError inside the guest.

The hook applies to imports originating from the guest's own namespace
(matched by identity on the guest globals dict, so shadowing __name__ does
not help); allowed libraries stay free to lazily import their own internals
while running guest-invoked code. This is accident containment, not a
jail: kernel-level hardening is a deployment concern.

Extra roots can be granted via the CASBENCH_SHIM_EXTRA_IMPORTS environment
variable (comma-separated top-level module names).
"""

import builtins
import os

DEFAULT_ALLOWED_ROOTS = frozenset(
    {
        # the CAS and its numeric substrate
        "sympy",
        "mpmath",
        # math/number utilities
        "math",
        "cmath",
        "fractions",
        "decimal",
        "numbers",
        "statistics",
        "random",
        # iteration/data utilities
        "itertools",
        "functools",
        "operator",
        "collections",
        "heapq",
        "bisect",
        "array",
        "copy",
        # text utilities
        "re",
        "string",
        "unicodedata",
        # declarative plumbing commonly emitted by code models
        "typing",
        "enum",
        "dataclasses",
        "abc",
        # the shim's own oracle module, imported by escalation scripts
        "casbench_shim",
    }
)

_ENV_EXTRA = "CASBENCH_SHIM_EXTRA_IMPORTS"


def allowed_roots() -> frozenset:
    extra = {
        name.strip()
        for name in os.environ.get(_ENV_EXTRA, "").split(",")
        if name.strip()
    }
    return DEFAULT_ALLOWED_ROOTS | extra


class ImportGuard:
    """Context manager enforcing the allowlist for guest-context imports.

    guest_globals is the exact dict the guest script executes in; imports
    whose calling namespace is that dict (module level or inside
    guest-defined functions) are checked, everything else passes through.
    """

    def __init__(self, guest_globals: dict, roots=None):
        self.guest_globals = guest_globals
        self.roots = frozenset(roots) if roots is not None else allowed_roots()
        self._original = None

    def _guarded(self, name, globals=None, locals=None, fromlist=(), level=0):
        # bare __import__(...) calls carry no globals; treat them as guest
        # context too, so the obvious dynamic evasion is caught (libraries
        # that probe optional deps this way already tolerate ImportError)
        guest_context = globals is self.guest_globals or globals is None
        if guest_context and level == 0:
            root = name.split(".", 1)[0]
            if root not in self.roots:
                raise ImportError(
                    f"import of {name!r} is blocked by the sandbox allowlist"
                )
        return self._original(name, globals, locals, fromlist, level)

    def __enter__(self):
        self._original = builtins.__import__
        builtins.__import__ = self._guarded
        return self

    def __exit__(self, *exc_info):
        builtins.__import__ = self._original
        return False
