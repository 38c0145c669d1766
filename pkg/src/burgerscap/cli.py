"""Command line entry point: ``burgerscap <subcommand> --config FILE``."""
import argparse
import glob
import logging
import os
import sys

from . import pipeline
from .absorbing import AbsorbingConfig, build_absorbing_set
from .errors import ProofError
from .fixedpoint import certify_local
from .integrator import Doubleton, IntegratorConfig, inclusion_step

log = logging.getLogger("burgerscap")


def _polybd_table(P, m=None):
    lines = []
    pipeline._emit_polybd(lines, "set", P, m)
    return "\n".join(lines[1:])


def _load(args):
    cfg = pipeline.load_config(args.config)
    if getattr(args, "max_steps", None) is not None:
        cfg.max_steps = args.max_steps
    return cfg


def cmd_prove(args):
    cfg = _load(args)
    cert = pipeline.prove_global(cfg, log=log.info)
    out = args.out or cfg.output_path
    if out:
        pipeline.emit_certificate(cert, out)
        log.info("certificate written to %s", out)
    else:
        sys.stdout.write(pipeline.emit_text(cert))
    print(pipeline.format_table([list(pipeline.SUMMARY_COLUMNS), cert.summary_row()]))
    for msg in cert.messages:
        print(msg)
    return 0 if cert.global_ else 1


def cmd_absorbing(args):
    cfg = _load(args)
    p, f = cfg.params(), cfg.forcing_set()
    V = build_absorbing_set(AbsorbingConfig.from_problem(p, f, M=cfg.M), p, f)
    text = _polybd_table(V.body, V.m) + "\n"
    _write(args.out, text)
    return 0


def cmd_fixed_point(args):
    cfg = _load(args)
    p, f = cfg.params(), cfg.forcing_set()
    local = certify_local(p, f, M=cfg.M, s=float(cfg.s))
    l = float(local.l_enlarged.hi)
    lines = ["xbar = " + " ".join(repr(float(x)) for x in local.xbar),
             "eigenvalues = " + " ".join(f"{z.real:.6g}{z.imag:+.6g}i" for z in local.change.eigenvalues),
             f"l = {l!r}",
             f"attracting = {str(l < 0).lower()}",
             "trapping region (canonical coordinates):",
             _polybd_table(local.enlarged.canonical(local.change, p.alpha).body, p.m)]
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_integrate(args):
    cfg = _load(args)
    p, f = cfg.params(), cfg.forcing_set()
    V = build_absorbing_set(AbsorbingConfig.from_problem(p, f, M=cfg.M), p, f)
    icfg = IntegratorConfig(order=cfg.taylor_order, h=cfg.step_size, s=float(cfg.s))
    x, T = Doubleton.from_box(V.finite.to_real()), V.tail()
    for i in range(args.steps):
        r = inclusion_step(x, T, icfg.h, p, f, icfg)
        x, T = r.finite, r.tail
        log.info("step %d: max finite radius %.3e, tail C %.3e", i + 1,
                 float(x.hull().rad().max()), T.C)
    body = pipeline._combine_real(x.hull(), T)
    text = f"t = {args.steps * icfg.h!r}\n" + _polybd_table(body, p.m) + "\n"
    _write(args.out, text)
    return 0


def cmd_report(args):
    paths = sorted(glob.glob(os.path.join(args.certs, "*.cert")))
    if not paths:
        print(f"no certificates in {args.certs}", file=sys.stderr)
        return 1
    _write(args.out, pipeline.format_table(pipeline.report(paths)) + "\n")
    return 0


def _write(path, text):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="burgerscap",
                                     description="Computer-assisted proofs of global attraction for forced viscous Burgers.")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, config=True):
        sp = sub.add_parser(name, help=help_)
        if config:
            sp.add_argument("--config", required=True, help="key = value configuration file")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
        sp.set_defaults(func=func)
        return sp

    sp = add("prove", cmd_prove, "run the full proof and emit a certificate")
    sp.add_argument("--max-steps", type=int, help="integration step budget")
    add("absorbing-set", cmd_absorbing, "construct and print the absorbing set")
    add("fixed-point", cmd_fixed_point, "certify the local fixed point and print the trapping region")
    sp = add("integrate", cmd_integrate, "integrate the absorbing set for a number of steps")
    sp.add_argument("--steps", type=int, required=True)
    sp = add("report", cmd_report, "aggregate certificates into a summary table", config=False)
    sp.add_argument("--certs", required=True, help="directory of *.cert files")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ProofError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
