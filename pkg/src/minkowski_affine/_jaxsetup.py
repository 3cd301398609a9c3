"""Process-wide jax configuration.

Everything in this package needs float64; the flag is global to jax, so it
is set once on import. ``MINKAFF_JAX_CACHE_DIR`` enables the persistent
compilation cache, which removes the compile cost on repeated runs.
"""

import os

import jax

jax.config.update("jax_enable_x64", True)
jax.config.update("jax_platforms", "cpu")

_cache_dir = os.environ.get("MINKAFF_JAX_CACHE_DIR")
if _cache_dir:
    jax.config.update("jax_compilation_cache_dir", _cache_dir)
    jax.config.update("jax_persistent_cache_min_compile_time_secs", 0.5)
