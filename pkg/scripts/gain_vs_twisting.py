"""Gain vs twisting strength at N = 1000: echo, QCRB, direct squeezing, SQL and Heisenberg lines."""
from _common import parse_outdir, run

out, threads = parse_outdir(__doc__)
run(["baselines", "--n", "1000", "--q-min", "0.1", "--points", "200", "--no-timestamp", "-o", str(out / "gain_vs_twisting.csv")], threads)
