"""casbench: benchmark harness for CAS-script math reasoning.

Pipeline: render a code-generation prompt for a math problem, obtain a guest
script from an LLM backend (live or replayed), execute it in a resource-limited
sandbox, feed execution errors back through a bounded repair loop, extract the
boxed answer, and score it symbolically against ground truth.
"""

__version__ = "0.1.0"
