"""Gain vs detection resolution at N = 1000 for the echo at Q_opt and Q_sq, direct squeezing and the noisy GHZ bound."""
from twistlab.baselines import optimal_squeezing

from _common import parse_outdir, run

out, threads = parse_outdir(__doc__)
common = ["noise-sweep", "--n", "1000", "--dn-min", "0.1", "--dn-max", "100", "--points", "61", "--no-timestamp"]
run([*common, "-o", str(out / "gain_vs_detection_qopt.csv")], threads)
q_sq = optimal_squeezing(1000).Q
run([*common, "--q", repr(q_sq), "--ghz", "false", "-o", str(out / "gain_vs_detection_qsq.csv")], threads)
