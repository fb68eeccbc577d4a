import pytest

from gbo_lab._kernels import HAVE_NUMBA

BACKENDS = [pytest.param("numba", marks=pytest.mark.skipif(not HAVE_NUMBA,
                                                          reason="numba disabled")),
            "numpy"]
