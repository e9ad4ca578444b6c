"""Anti-squeezed and squeezed variances through threshold, written as CSV.

Equivalent to ``wigner-opo sweep --mu-range 0.2:1.8:9 --method linearized,quadrature``.
"""

import sys

from wigner_opo.cli import main

sys.exit(main(["sweep", "--mu-range", "0.2:1.8:9", "--method", "linearized,quadrature"] + sys.argv[1:]))
