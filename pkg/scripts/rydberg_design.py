"""Rydberg-dressed echo: detuning window and gain vs N for epsilon = 0.1 and the C_tilde band [1e10, 1e11]."""
from _common import parse_outdir, run

out, threads = parse_outdir(__doc__)
run(["rydberg-design", "--n-min", "10", "--n-max", "10000", "--n-points", "121", "--no-timestamp", "-o", str(out / "rydberg_gain.csv")], threads)
