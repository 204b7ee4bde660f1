"""Batch command line: ``soficlab <subcommand> [options]``.

Exit codes: 0 success, 1 when a searched-for object was not found (or the
selftest failed), 2 on invalid input.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from fractions import Fraction
from typing import Sequence

from soficlab import bernoulli, commutant, maps, perm, report, scale, selftest, sofic

EXIT_OK, EXIT_NOT_FOUND, EXIT_INVALID = 0, 1, 2


class UsageError(ValueError):
    pass


def _params(items: Sequence[str] | None) -> dict:
    out: dict = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key == "points":
            out[key] = [int(v) for v in value.split(",") if v]
        else:
            out[key] = value
    return out


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _load_perm_or_family(args) -> tuple[str, perm.Permutation]:
    if args.perm:
        return args.perm, perm.read_permutation(args.perm)
    if not args.family or args.n is None:
        raise UsageError("give --perm FILE or both --family and --n")
    return args.family, perm.build_family(args.family, args.n, args.seed, _params(args.param))


def _emit(args, doc: dict, csv_text: str | None) -> None:
    text = report.dumps(doc) if args.format == "json" or csv_text is None else csv_text
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- subcommands -----------------------------------------------------------


def cmd_metrics(args) -> int:
    label, p = _load_perm_or_family(args)
    r = perm.length_report(p)
    doc = report.envelope("metrics", _config(args), args.seed, {"label": label, **report.length_payload(r)})
    _emit(args, doc, report.length_csv([(label, r)]))
    return EXIT_OK


def cmd_profile(args) -> int:
    params = _params(args.param)
    if args.map:
        fam = scale.named_family("map", params={"spec": args.map})
    else:
        fam = scale.named_family(args.family, args.seed, params)
    sched = scale.ScaleSchedule.parse(args.scales)
    th = scale.Thresholds(args.exponent_max, args.last_max)
    prof = scale.profile(fam, sched, th)
    doc = report.envelope("profile", _config(args), args.seed, report.profile_payload(prof))
    _emit(args, doc, report.profile_csv(prof))
    return EXIT_OK


def cmd_discretize(args) -> int:
    spec = maps.parse_map(args.map)
    p = maps.discretize_map(spec, args.n)
    if args.perm_out:
        perm.write_permutation(p, args.perm_out, binary=args.binary)
    m = args.bins if args.bins is not None else min(100, args.n)
    est = scale.estimate_standard_map(p, m)
    payload = {
        "map": str(spec),
        "n": args.n,
        "bins": m,
        "gm_defect": est.defect,
        "estimate": report.estimate_payload(est),
        "true_bin_map": list(maps.true_bin_map(spec, m)),
    }
    if args.perm_out is None and args.n <= 1000:
        payload["permutation"] = list(p)
    doc = report.envelope("discretize", _config(args), args.seed, payload)
    rows = [(j, est.bins[j - 1], payload["true_bin_map"][j - 1]) for j in range(1, m + 1)]
    _emit(args, doc, report.to_csv(["bin", "estimated", "true"], rows))
    return EXIT_OK


def cmd_estimate_map(args) -> int:
    p = perm.read_permutation(args.perm)
    t = scale.bin_transfer(p, args.bins)
    est = scale.estimate_standard_map(p, args.bins)
    payload = {"n": p.n, "bins": args.bins, "estimate": report.estimate_payload(est)}
    if args.map:
        truth = maps.true_bin_map(maps.parse_map(args.map), args.bins)
        payload["true_bin_map"] = list(truth)
        payload["matching_bins"] = sum(a == b for a, b in zip(est.bins, truth))
    if args.with_matrix:
        payload["transfer"] = report.transfer_payload(t)
    doc = report.envelope("estimate-map", _config(args), args.seed, payload)
    _emit(args, doc, report.transfer_csv(t))
    return EXIT_OK


def _candidate(args) -> sofic.SoficRepCandidate:
    scales = _int_list(args.scales) if args.scales else None
    if args.builder == "cyclic":
        return sofic.cyclic_rep(scales or [args.n or 100])
    if args.builder == "random":
        if args.presentation:
            # random permutations checked against the relators of a given group
            pres = sofic.Presentation.load(args.presentation)
            cand = sofic.random_rep(args.seed, scales or [args.n or 10_000], pres.generator_count)
            return dataclasses.replace(cand, presentation=pres)
        return sofic.random_rep(args.seed, scales or [args.n or 10_000], args.generators)
    if args.presentation:
        pres = sofic.Presentation.load(args.presentation)
    elif args.cyclic_order:
        k = args.cyclic_order
        pres = sofic.Presentation(1, ((1,) * k,), sofic.cyclic_group_table(k))
    else:
        raise UsageError("regular builder needs --presentation FILE or --cyclic-order K")
    copies = _int_list(args.copies) if args.copies else [1]
    return sofic.regular_rep(pres, copies)


def cmd_sofic(args) -> int:
    cand = _candidate(args)
    r = sofic.sofic_defect(cand, args.radius)
    payload = {"candidate": cand.config, "presentation": cand.presentation.to_json(), **report.defect_payload(r)}
    doc = report.envelope("sofic", _config(args), args.seed, payload)
    _emit(args, doc, report.defect_csv(r))
    return EXIT_OK


def _bernoulli_perms(args) -> list[perm.Permutation]:
    perms = [perm.read_permutation(path) for path in args.perm or []]
    if args.shifts:
        if args.n is None:
            raise UsageError("--shifts needs --n")
        perms += [perm.cyclic_shift(args.n, k) for k in _int_list(args.shifts)]
    if not perms:
        raise UsageError("give --shifts and --n, or --perm FILE")
    return perms


def cmd_bernoulli(args) -> int:
    perms = _bernoulli_perms(args)
    m, n = len(perms), perms[0].n
    code = EXIT_OK
    if args.mode == "moments":
        signs = tuple(_int_list(args.signs)) if args.signs else (1,) * m
        pat = bernoulli.Pattern(tuple(perms), signs)
        est = bernoulli.empirical_moments(pat, args.trials, args.seed, args.deviation)
        payload = report.moments_payload(est)
        payload["variance_bound"] = bernoulli.variance_bound(m, n)
        rows = [(Fraction(1, 2**m), i, f) for i, f in enumerate(est.fails_per_constraint)]
        csv_text = report.to_csv(["theory_mean", "sign_code", "fails"], rows)
    elif args.mode == "find":
        res = bernoulli.find_projection(perms, args.epsilon, args.max_trials, args.seed, args.lam)
        payload = report.search_payload(res, m, n, args.seed)
        if res.found and args.projection_out:
            with open(args.projection_out, "w", encoding="ascii", newline="\n") as fh:
                fh.write(res.projection.to_text())
        code = EXIT_OK if res.found else EXIT_NOT_FOUND
        csv_text = None
    else:
        if args.projection:
            with open(args.projection, encoding="ascii") as fh:
                a = bernoulli.DiagonalProjection.from_text(fh.read())
        else:
            probe = [perm.Permutation.identity(n), *perms]
            res = bernoulli.find_projection(probe, args.epsilon, args.max_trials, args.seed, args.lam)
            if not res.found:
                doc = report.envelope("bernoulli", _config(args), args.seed, report.search_payload(res, m + 1, n, args.seed))
                _emit(args, doc, None)
                return EXIT_NOT_FOUND
            a = res.projection
        al = bernoulli.align_to_dyadic(perms, a, args.level)
        payload = report.alignment_payload(al)
        csv_text = None
    doc = report.envelope("bernoulli", _config(args), args.seed, {"mode": args.mode, **payload})
    _emit(args, doc, csv_text)
    return code


def cmd_commutant(args) -> int:
    reports = []
    for i in range(args.runs):
        seed = args.seed + i
        if args.perm:
            p = perm.read_permutation(args.perm)
        else:
            if not args.family or args.n is None:
                raise UsageError("give --perm FILE or both --family and --n")
            p = perm.build_family(args.family, args.n, seed, _params(args.param))
        reports.append(commutant.commutant_witness(p, seed))
    payload = {
        "runs": [r.as_dict() for r in reports],
        "invariants_hold": all(r.invariants_hold() for r in reports),
    }
    doc = report.envelope("commutant", _config(args), args.seed, payload)
    _emit(args, doc, report.commutant_csv(reports))
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = selftest.run()
    ok = all(r["passed"] for r in results)
    doc = report.envelope("selftest", _config(args), args.seed, {"passed": ok, "checks": results})
    rows = [(r["check"], r["passed"], r["detail"]) for r in results]
    _emit(args, doc, report.to_csv(["check", "passed", "detail"], rows))
    return EXIT_OK if ok else EXIT_NOT_FOUND


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soficlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--config", help="JSON file of option defaults; flags override it")

    def family_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--family", choices=perm.FAMILY_KINDS)
        p.add_argument("--n", type=int)
        p.add_argument("--param", action="append", help="family parameter key=value (repeatable)")
        p.add_argument("--perm", help="permutation file (text or PRM1 binary)")

    p = sub.add_parser("metrics", help="length statistics of one permutation")
    family_opts(p)
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("profile", help="length profile of a family over a scale schedule")
    p.add_argument("--family", choices=perm.FAMILY_KINDS, default="cyclic_shift")
    p.add_argument("--map", help="profile a discretised map spec instead of a family")
    p.add_argument("--param", action="append")
    p.add_argument("--scales", default="2^10..2^20", help="'8,16,32' or '2^10..2^20'")
    p.add_argument("--exponent-max", type=float, default=scale.Thresholds.exponent_max)
    p.add_argument("--last-max", type=float, default=scale.Thresholds.last_max)
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("discretize", help="map spec to permutation, with its gm defect")
    p.add_argument("--map", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bins", type=int)
    p.add_argument("--perm-out", help="write the permutation file here")
    p.add_argument("--binary", action="store_true", help="write PRM1 binary instead of text")
    common(p)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("estimate-map", help="estimated bin map of a permutation file")
    p.add_argument("--perm", required=True)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--map", help="compare with the exact bin map of this spec")
    p.add_argument("--with-matrix", action="store_true")
    common(p)
    p.set_defaults(func=cmd_estimate_map)

    p = sub.add_parser("sofic", help="sofic defect report")
    p.add_argument("--builder", choices=("regular", "cyclic", "random"), default="regular")
    p.add_argument("--presentation", help="presentation JSON file")
    p.add_argument("--cyclic-order", type=int, help="use Z/K with its table")
    p.add_argument("--copies", help="comma list of copies per scale (regular builder)")
    p.add_argument("--scales", help="comma list of degrees (cyclic/random builders)")
    p.add_argument("--n", type=int)
    p.add_argument("--generators", type=int, default=2)
    p.add_argument("--radius", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_sofic)

    p = sub.add_parser("bernoulli", help="pattern-trace moments, projection search, dyadic alignment")
    p.add_argument("--mode", choices=("moments", "find", "align"), default="moments")
    p.add_argument("--n", type=int)
    p.add_argument("--shifts", help="comma list of cyclic shift amounts used as permutations (0 = identity)")
    p.add_argument("--perm", action="append", help="permutation file (repeatable)")
    p.add_argument("--signs", help="comma list of 0/1 signs (moments mode)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--deviation", type=float, default=0.01)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--max-trials", type=int, default=100)
    p.add_argument("--lam", type=int, help="Chebyshev budget; default 2^m + 1")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--projection", help="projection file for align mode")
    p.add_argument("--projection-out", help="write the found projection here")
    common(p)
    p.set_defaults(func=cmd_bernoulli)

    p = sub.add_parser("commutant", help="commutation witness report")
    family_opts(p)
    p.add_argument("--runs", type=int, default=1, help="seeds seed..seed+runs-1")
    common(p)
    p.set_defaults(func=cmd_commutant)

    p = sub.add_parser("selftest", help="run the exact invariant suites")
    common(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            defaults = json.load(fh)
        known = vars(args)
        unknown = [k for k in defaults if k.replace("-", "_") not in known]
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub = parser._subparsers._group_actions[0].choices[args.subcommand]  # noqa: SLF001
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
    return args


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"soficlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"soficlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
