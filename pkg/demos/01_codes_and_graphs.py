"""Code construction and Tanner graphs.

Builds the BCH codes used throughout, a random regular LDPC code, shows the
alist round trip, and prints the graph statistics the decoders rely on.

Run:  python3 demos/01_codes_and_graphs.py
"""

import numpy as np

from ewgnn import alist_read, alist_write, bch_construct, build_graph, ldpc_regular_construct

print("=== BCH family over GF(2^6), n = 63 ===")
for delta in (5, 7, 11):
    code = bch_construct(6, delta)
    print(f"  delta={delta:2d} -> {code.name}  (k={code.k}, {code.n - code.k} checks)")

print()
print("=== Regular LDPC ensemble (wc=3, wr=6) ===")
code = ldpc_regular_construct(32, 3, 6, seed=7)
H = code.parity
print(f"  {code.name}: H is {H.rows}x{H.cols}, k={code.k}")
col_w = sorted({int(w) for w in H.a.sum(axis=0)})
row_w = sorted({int(w) for w in H.a.sum(axis=1)})
print(f"  column weights: {col_w}, row weights: {row_w}")

graph = build_graph(H)
print(f"  Tanner graph: {graph.n_var} variables, {graph.n_chk} checks, E={graph.E} edges")
print(f"  first edge {graph.edges[0]}, last edge {graph.edges[-1]} (row-major canonical order)")

print()
print("=== alist round trip ===")
text = alist_write(H)
back = alist_read(text)
print(f"  serialized {len(text)} bytes; round-trip exact: {np.array_equal(back.a, H.a)}")
print("  header lines:")
for line in text.splitlines()[:4]:
    print("   ", line)
