"""Static synthesis of theory-level reactive controllers.

The pipeline turns an LTL specification over linear integer/real
arithmetic into a standalone deterministic controller: a Boolean
abstraction of the spec, a safety-game Boolean controller, a compiled
input partitioner, and statically synthesized Skolem-function providers
(optionally shaped by adaptive constraints), plus a runtime simulator
and a benchmark harness.
"""

__version__ = "0.1.0"
