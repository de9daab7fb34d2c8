import argparse
import time
from pathlib import Path

from jpegid.dc_feature import FeatureParams
from jpegid.experiments import Manifest, run_eval
from jpegid.matcher import SIGN_POLICIES, MatchParams

MANIFESTS = Path(__file__).resolve().parent.parent / "manifests"


def eval_cli(default_manifest: str, description: str) -> None:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--manifest", default=str(MANIFESTS / default_manifest))
    ap.add_argument("--count", type=int, help="override the number of originals")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--th", type=int, default=14)
    ap.add_argument("--delta", type=int, default=50)
    ap.add_argument("--d", type=float, default=4.0, help="skip threshold for both sides")
    ap.add_argument("--sign-policy", choices=SIGN_POLICIES, default="zero_wildcard")
    ap.add_argument("--no-skip", action="store_true", help="disable magnitude skipping")
    args = ap.parse_args()

    manifest = Manifest.load(args.manifest)
    if args.count is not None:
        manifest.count = args.count
    if args.seed is not None:
        manifest.seed = args.seed
    params = FeatureParams(args.th, args.delta)
    mp = MatchParams(args.d, args.d, args.sign_policy, skip_large=not args.no_skip)
    start = time.perf_counter()
    reports = run_eval(manifest, params, mp)
    print(f"{manifest.count} originals at {manifest.size[0]}x{manifest.size[1]}, "
          f"query QFs {list(manifest.query_qf)}, sizes {list(manifest.query_sizes)}")
    print(f"th={params.th} delta={params.delta} d={args.d:g} policy={mp.sign_policy} "
          f"skip={'on' if mp.skip_large else 'off'}")
    print("db\tqf\ttp\tfp\tfn\ttn\tprecision\trecall")
    for k, (qf, r) in enumerate(reports, 1):
        print(f"DB{k}\t{qf}\t{r.tp}\t{r.fp}\t{r.fn}\t{r.tn}\t{r.precision:.4f}\t{r.recall:.4f}")
    print(f"elapsed {time.perf_counter() - start:.1f}s")
