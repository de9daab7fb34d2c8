"""Calibrate the dead zone and step size from single/double compression pairs.

Prints both the dequantized and the quantized-difference variants of the
step size, plus the per-QF-pair breakdown of the dead zone.
"""

import argparse
import time

from jpegid.dc_feature import calibrate_delta, calibrate_th
from jpegid.experiments import Manifest, calibration_pairs

from _common import MANIFESTS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--manifest", default=str(MANIFESTS / "calibrate.manifest"))
    ap.add_argument("--count", type=int)
    args = ap.parse_args()
    manifest = Manifest.load(args.manifest)
    if args.count is not None:
        manifest.count = args.count
    start = time.perf_counter()
    pairs = calibration_pairs(manifest)
    th = calibrate_th(pairs)
    print(f"{len(pairs)} pairs from {manifest.count} originals")
    print(f"th = {th}")
    print(f"delta (dequantized) = {calibrate_delta(pairs, th)}")
    print(f"delta (quantized)   = {calibrate_delta(pairs, th, dequantized=False)}")
    n1, n2 = len(manifest.single_qf), len(manifest.double_qf)
    print("per-pair th (rows: single QF, columns: double QF)")
    print("\t" + "\t".join(map(str, manifest.double_qf)))
    for i, qf1 in enumerate(manifest.single_qf):
        row = []
        for j in range(n2):
            subset = pairs[i * n2 + j::n1 * n2]
            row.append(str(calibrate_th(subset)))
        print(f"{qf1}\t" + "\t".join(row))
    print(f"elapsed {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
