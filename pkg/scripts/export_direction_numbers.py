"""Write the Joe-Kuo direction numbers shipped with scipy as a plain text table.

The output uses the published ``new-joe-kuo-6.21201`` layout: a header line,
then ``d s a m_1 ... m_s`` for every dimension d >= 2.

    python scripts/export_direction_numbers.py src/digitalqmc/data/new-joe-kuo-6.21201
"""
import sys
from pathlib import Path

import numpy as np
import scipy.stats

src = Path(scipy.stats.__file__).parent / "_sobol_direction_numbers.npz"
table = np.load(src)
poly, vinit = table["poly"], table["vinit"]

lines = ["d       s       a       m_i"]
for j in range(1, len(poly)):
    p = int(poly[j])
    s = p.bit_length() - 1
    a = (p >> 1) & ((1 << (s - 1)) - 1)
    lines.append(" ".join(str(v) for v in (j + 1, s, a, *vinit[j, :s])))

Path(sys.argv[1]).write_text("\n".join(lines) + "\n")
