"""``ssmsim`` command-line entry point.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 diverged training.
"""
import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from . import checkpoint, config as config_mod
from .core import forward_mean_field, reconstruct, sample_mask, train
from .cost import compare_variants, estimate
from .crossbar import equivalence_report, export_netlist, forward_hw, map_weights
from .csr import CsrMasks, bitstream, csr_new, tap_frequencies, TimingSpec, timing_check
from .datasets import bars_and_stripes, read_csv, two_class_blobs, write_csv
from .estimator import _mask_pairs
from .exceptions import DivergedTrainingError, ParameterError

log = logging.getLogger("ssmsim")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4


class _Run:
    def __init__(self, args):
        cfg = config_mod.load(args.config) if args.config else config_mod.RunConfig()
        pairs = [tuple(s.split("=", 1)) if "=" in s else (s, "") for s in args.set or []]
        if args.seed is not None:
            pairs.append(("seed", str(args.seed)))
        self.cfg = config_mod.parse_pairs(pairs, cfg) if pairs else cfg
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)

    def path(self, p):
        return p if os.path.isabs(p) else os.path.join(self.out, p)

    def echo_config(self, **extra):
        cfg = self.cfg
        if extra:
            cfg = dataclasses.replace(cfg, **extra)
        with open(self.path("config.resolved"), "w") as fh:
            fh.write(cfg.to_text())

    def report_p(self):
        cfg = self.cfg
        if cfg.rng_source == "csr":
            log.info("rng=csr N=%d k=%d requested p=%s realized p=%s",
                     cfg.csr_bits, cfg.csr_k, cfg.p, cfg.realized_p)
        return {"requested_p": cfg.p, "realized_p": cfg.realized_p}


def cmd_gen_data(run, args):
    seed = run.cfg.seed
    if args.kind == "bars-stripes":
        X, y = bars_and_stripes(args.side, args.n_samples, seed)
    else:
        X, y = two_class_blobs(args.n_samples or 200, args.n_features, args.separation,
                               args.sigma, seed)
    path = run.path(run.cfg.dataset)
    write_csv(path, X, y)
    print(f"wrote {X.shape[0]} examples x {X.shape[1]} features to {path}")


def cmd_train(run, args):
    cfg = run.cfg
    X, y = read_csv(run.path(cfg.dataset))
    n_out = cfg.num_outputs or (int(y.max()) + 1 if y is not None and y.size else None)
    ssm_cfg = cfg.ssm_config(num_visible=X.shape[1], num_outputs=max(n_out or 2, 2))
    if cfg.num_visible is not None and cfg.num_visible != X.shape[1]:
        raise ParameterError(
            f"num_visible={cfg.num_visible} but dataset has {X.shape[1]} columns")
    pinfo = run.report_p()
    mask_source = None
    if cfg.rng_source == "csr":
        mask_source = CsrMasks(csr_new(cfg.csr_bits, cfg.csr_k, cfg.seed), cfg.ticks_per_sample)

    metrics_path = run.path(cfg.metrics)
    with open(metrics_path, "w") as mf:
        def emit(m):
            mf.write(f"epoch={m.epoch} recon_err={m.reconstruction_error:.17g} "
                     f"wdelta={m.mean_abs_weight_delta:.17g}\n")
        net, history = train(X, y, ssm_cfg, mask_source=mask_source, callback=emit)
    checkpoint.save(run.path(cfg.checkpoint), net, cfg.seed,
                    extra={k: repr(float(v)) for k, v in pinfo.items()})
    run.echo_config(num_visible=ssm_cfg.num_visible, num_outputs=ssm_cfg.num_outputs)
    if history:
        print(f"trained {len(history)} epochs, final recon_err={history[-1].reconstruction_error:.6f}")
    else:
        print("trained 0 epochs")
    print(f"requested_p={pinfo['requested_p']} realized_p={pinfo['realized_p']}")


def _load_for_dataset(run):
    net, header = checkpoint.load(run.path(run.cfg.checkpoint))
    X, y = read_csv(run.path(run.cfg.dataset))
    if X.shape[0] and X.shape[1] != net.num_visible:
        raise ParameterError(
            f"dataset has {X.shape[1]} columns, checkpoint expects {net.num_visible}")
    return net, header, X, y


def cmd_eval(run, args):
    net, _, X, y = _load_for_dataset(run)
    rng = np.random.default_rng(run.cfg.seed)
    lines = [f"n_examples={X.shape[0]}"]
    if X.shape[0]:
        rec = np.stack([reconstruct(net, x, sample_mask(net.W.shape, net.p, rng), rng) for x in X])
        lines.append(f"recon_err={float(np.mean((X - rec) ** 2)):.17g}")
        if y is not None:
            pred = forward_mean_field(net, X).scores.argmax(axis=1)
            lines.append(f"accuracy={float(np.mean(pred == y)):.17g}")
    text = "\n".join(lines) + "\n"
    with open(run.path("eval.txt"), "w") as fh:
        fh.write(text)
    run.echo_config()
    sys.stdout.write(text)


def cmd_simulate_hw(run, args):
    cfg = run.cfg
    net, _, X, y = _load_for_dataset(run)
    pinfo = run.report_p()
    program = map_weights(net, cfg.device(), cfg.quant_levels, cfg.act_gain)
    masks = _mask_pairs(net, X.shape[0], cfg.rng_source, cfg.realized_p, cfg.seed,
                        cfg.csr_bits, cfg.ticks_per_sample, cfg.csr_k)
    pred_path = run.path("predictions.txt")
    with open(pred_path, "w") as fh:
        if X.shape[0]:
            trace = forward_hw(program, X, (np.stack([m[0] for m in masks]),
                                            np.stack([m[1] for m in masks])))
            for k, w in enumerate(trace.winner):
                fh.write(f"{w}" + (f" {y[k]}" if y is not None else "") + "\n")
    report = equivalence_report(net, program, X, masks)
    lines = [f"n_inputs={report.n_inputs}",
             f"max_abs_score_diff={report.max_abs_score_diff:.17g}",
             f"max_abs_hidden_diff={report.max_abs_hidden_diff:.17g}",
             f"wta_agreement={report.wta_agreement:.17g}",
             f"n_score_ties={report.n_score_ties}",
             f"requested_p={pinfo['requested_p']!r}",
             f"realized_p={pinfo['realized_p']!r}"]
    if X.shape[0] and y is not None:
        lines.append(f"hw_accuracy={float(np.mean(trace.winner == y)):.17g}")
    text = "\n".join(lines) + "\n"
    with open(run.path("equivalence.txt"), "w") as fh:
        fh.write(text)
    run.echo_config()
    sys.stdout.write(text)


def cmd_rng_test(run, args):
    cfg = run.cfg
    state = csr_new(cfg.csr_bits, cfg.csr_k, cfg.seed)
    n_ticks = args.ticks or 10 * cfg.csr_bits
    freqs = tap_frequencies(state, n_ticks)
    print(f"csr N={state.n_bits} k={state.n_ones} ticks={n_ticks}")
    print(f"requested_p={cfg.p!r} realized_p={state.p!r}")
    for i, f in enumerate(freqs):
        print(f"tap {i}: {f:.6f}")
    rep = timing_check(TimingSpec(args.clock_period, cfg.switch_time, args.setup_margin))
    print(f"timing: clock={args.clock_period}ns valid={rep.valid} "
          f"max_freq={rep.max_frequency_mhz:.6g}MHz")
    if args.dump:
        bits = bitstream(state, args.tap, n_ticks)
        with open(run.path(args.dump), "w") as fh:
            fh.writelines(f"{b}\n" for b in bits)
    run.echo_config()


def cmd_cost(run, args):
    cfg = run.cfg
    dims = (cfg.num_visible or 16, cfg.num_hidden, cfg.num_outputs or 2)
    tech = cfg.technology()
    reports = {v: estimate(*dims, cu_variant=v, n_cu=cfg.n_cu, tech=tech,
                           pair_multiplier=cfg.pair_multiplier) for v in ("cmos", "memristive")}
    main = reports[cfg.cu_variant]
    print(main.as_text())
    print(compare_variants(reports["cmos"], reports["memristive"]).as_text())
    print("---")
    print(main.as_keyvalue())
    with open(run.path("cost.txt"), "w") as fh:
        fh.write(main.as_keyvalue() + "\n")
    run.echo_config()


def cmd_export_netlist(run, args):
    cfg = run.cfg
    net, _ = checkpoint.load(run.path(cfg.checkpoint))
    program = map_weights(net, cfg.device(), cfg.quant_levels, cfg.act_gain)
    path = run.path(cfg.netlist)
    with open(path, "w") as fh:
        fh.write(export_netlist(program, cfg.csr_bits))
    run.echo_config()
    print(f"wrote netlist to {path}")


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "simulate-hw": cmd_simulate_hw,
    "rng-test": cmd_rng_test,
    "cost": cmd_cost,
    "export-netlist": cmd_export_netlist,
    "gen-data": cmd_gen_data,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key=value config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--set", action="append", default=argparse.SUPPRESS,
                        metavar="KEY=VALUE", help="override one config entry")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="ssmsim", parents=[common],
                                     description="Synaptic Sampling Machine simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "gen-data":
            sp.add_argument("--kind", choices=("bars-stripes", "two-class-blobs"),
                            default="bars-stripes")
            sp.add_argument("--side", type=int, default=4)
            sp.add_argument("--n-samples", type=int, default=0)
            sp.add_argument("--n-features", type=int, default=16)
            sp.add_argument("--separation", type=float, default=4.0)
            sp.add_argument("--sigma", type=float, default=0.1)
        elif name == "rng-test":
            sp.add_argument("--ticks", type=int, default=0)
            sp.add_argument("--tap", type=int, default=0)
            sp.add_argument("--dump", help="write the tap bitstream as 0/1 lines")
            sp.add_argument("--clock-period", type=float, default=100.0, help="ns")
            sp.add_argument("--setup-margin", type=float, default=5.0, help="ns")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("out", "."), ("set", None),
                          ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        run = _Run(args)
        if run.cfg.rng_source == "csr":
            # always surface the quantized p, even without -v
            log.setLevel(logging.INFO)
        COMMANDS[args.command](run, args)
    except DivergedTrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
