"""Wigner grids for 2S = 30 atoms: CSS, oversqueezed state, rotated state and echo output."""
from _common import parse_outdir, run

out, threads = parse_outdir(__doc__)
for stage, phi in (("css", 0.0), ("twisted", 0.0), ("rotated", 0.1), ("echo", 0.1)):
    run(["wigner", "--n", "30", "--stage", stage, "--phi", str(phi), "--no-timestamp", "-o", str(out / f"wigner_{stage}.csv")], threads)
