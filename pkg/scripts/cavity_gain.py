"""Cavity echo: gain vs detuning at N = 1e5 for three cooperativities, and the optimised (N, eta) map."""
from _common import parse_outdir, run

out, threads = parse_outdir(__doc__)
run(
    ["cavity-gain", "--n-min", "100000", "--n-max", "100000", "--n-points", "1",
     "--eta-min", "0.1", "--eta-max", "10", "--eta-points", "3",
     "--d-min", "0.3", "--d-max", "300", "--d-points", "61", "--no-timestamp", "-o", str(out / "cavity_gain_vs_detuning.csv")],
    threads,
)
run(
    ["cavity-gain", "--n-min", "100", "--n-max", "1000000", "--n-points", "25",
     "--eta-min", "0.01", "--eta-max", "100", "--eta-points", "25", "--d-free", "true",
     "--no-timestamp", "-o", str(out / "cavity_gain_map.csv")],
    threads,
)
