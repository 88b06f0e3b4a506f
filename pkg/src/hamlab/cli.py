"""Command-line front end.

Every subcommand prints a structured report to stdout and optionally
writes it to a file (--report); some emit artifact files (--out) in the
formats owned by the library modules. Randomized subcommands require an
explicit --seed and embed it in the report. Exit codes: 0 success,
2 validation/parse/promise errors, 3 budget errors, 64 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, amplify, clock, dense, hamiltonian, pcp, reports, signpoly
from .circuits import circuit_to_json
from .errors import (
    BudgetExceeded,
    DegreeOverflow,
    HamlabError,
    ValidationError,
)
from .states import IqpState, MpsState, StabilizerState, SubsetState, parse_state

USAGE_EXIT = 64
VALIDATION_EXIT = 2
BUDGET_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _read(path) -> str:
    return Path(path).read_text()


def _budget(args) -> int:
    if getattr(args, "budget", None) is not None:
        return int(args.budget)
    env = os.environ.get("HAMLAB_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"HAMLAB_BUDGET must be an integer, got {env!r}") from exc
    return amplify.DEFAULT_BUDGET


def _bits_arg(text: str, label: str) -> list[int]:
    if not all(c in "01" for c in text):
        raise ValidationError(f"{label} must be a string of 0/1, got {text!r}")
    return [int(c) for c in text]


def _emit(args, report: reports.Report, figures=()) -> None:
    text = report.render()
    sys.stdout.write(text)
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
        if figures and not getattr(args, "no_figures", False):
            stem = Path(args.report)
            for name, draw in figures:
                reports.render_figure(stem.with_name(f"{stem.stem}_{name}.png"), draw)


# -- subcommand handlers -------------------------------------------------------


def _cmd_signpoly(args) -> None:
    poly = signpoly.build_sign_poly(args.delta, args.eps, grid_points=args.grid_points)
    rep = reports.Report("signpoly")
    rep.add_all(
        "parameters",
        {"delta_prime": poly.delta_p, "eps_prime": poly.eps_p, "grid_points": args.grid_points},
    )
    rep.add_all(
        "polynomial",
        {
            "degree": poly.degree,
            "kappa": poly.kappa,
            "c_constant": poly.c_constant,
            "coefficient_count": len(poly.cheb),
        },
    )
    rep.add_all("certificate", poly.certificate)
    rep.add("coefficients", "chebyshev", list(poly.cheb))

    def draw(ax):
        xs = np.linspace(-2.0, 2.0, 2001)
        ax.plot(xs, poly(xs), lw=1.2)
        ax.axhline(1.0, color="gray", lw=0.6, ls="--")
        ax.axhline(-1.0, color="gray", lw=0.6, ls="--")
        ax.axvspan(-poly.delta_p, poly.delta_p, color="orange", alpha=0.2)
        ax.set_xlabel("x")
        ax.set_ylabel("P(x)")
        ax.set_title(f"sign approximant, degree {poly.degree}")

    _emit(args, rep, figures=[("curve", draw)])


def _cmd_decide(args) -> None:
    h = hamiltonian.ingest(_read(args.hamiltonian))
    state = parse_state(_read(args.state))
    inst = amplify.DecisionInstance(h, args.a, args.b, args.zeta, state)
    answer, info = amplify.decide(inst, strategy=args.strategy, budget=_budget(args))
    rep = reports.Report("decide")
    rep.add_all(
        "parameters",
        {
            "hamiltonian": args.hamiltonian,
            "state": args.state,
            "a": args.a,
            "b": args.b,
            "zeta": args.zeta,
            "budget": _budget(args),
            "strategy_requested": args.strategy,
        },
    )
    rep.add("result", "answer", answer)
    rep.add_all("result", {k: v for k, v in info.items() if k != "answer"})
    _emit(args, rep)


def _cmd_expect(args) -> None:
    h = hamiltonian.ingest(_read(args.hamiltonian))
    state = parse_state(_read(args.state))
    rep = reports.Report("expect")
    rep.add_all(
        "parameters",
        {
            "hamiltonian": args.hamiltonian,
            "state": args.state,
            "power": args.power,
            "budget": _budget(args),
        },
    )
    if args.estimate is not None:
        if not isinstance(state, IqpState):
            raise ValidationError("--estimate is only available for IQP states")
        if args.power != 1:
            raise ValidationError("--estimate only covers power 1")
        if args.seed is None:
            raise ValidationError("--estimate needs --seed")
        rng = np.random.default_rng(args.seed)
        value = sum(
            t.weight * state.estimate(t, args.estimate, rng) for t in h.terms
        )
        rep.add_all(
            "result",
            {
                "moment": value,
                "mode": "estimate",
                "per_term_eps": args.estimate,
                "error_bound": args.estimate * h.weight_sum,
                "seed": args.seed,
            },
        )
    else:
        value = amplify.moment(state, h, args.power, budget=_budget(args))
        rep.add("result", "moment", value)
        rep.add("result", "mode", "exact")
        rep.add("result", "observable_count", amplify.cumulative_count(h.m, args.power))
    _emit(args, rep)


def _cmd_fk_build(args) -> None:
    vc = clock.verifier_from_json(json.loads(_read(args.circuit)))
    input_x = _bits_arg(args.input, "--input") if args.input else None
    inst = clock.build_clock(vc, args.eps, input_x=input_x)
    Path(args.out).write_text(hamiltonian.to_text(inst.h_fk))
    rep = reports.Report("fk-build")
    rep.add_all(
        "parameters",
        {"circuit": args.circuit, "eps": args.eps, "input": args.input or "0" * vc.n_input},
    )
    rep.add_all(
        "instance",
        {
            "gate_count": inst.t,
            "data_qubits": vc.total,
            "clock_qubits": inst.t,
            "total_qubits": inst.n,
            "terms_in": inst.h_in.m,
            "terms_clock": inst.h_clock.m,
            "terms_prop": inst.h_prop.m,
            "terms_out": inst.h_out.m,
            "terms_total": inst.h_fk.m,
            "out": args.out,
        },
    )
    rep.add_all("certificate", inst.certificate)
    _emit(args, rep)


def _cmd_fk_verify(args) -> None:
    vc = clock.verifier_from_json(json.loads(_read(args.circuit)))
    input_x = _bits_arg(args.input, "--input") if args.input else None
    inst = clock.build_clock(vc, args.eps, input_x=input_x)
    witness = _bits_arg(args.witness, "--witness") if args.witness else None
    block = clock.build_block_instance(
        inst, b_offset=args.b_offset, idle_N=args.idle, witness=witness, eps=args.eps
    )
    chain = clock.verify_fidelity_chain(block)
    rep = reports.Report("fk-verify")
    rep.add_all(
        "parameters",
        {
            "circuit": args.circuit,
            "eps": args.eps,
            "idle": args.idle,
            "witness": args.witness or "0" * vc.n_witness,
            "b_offset": block.b_offset,
        },
    )
    rep.add_all("certificate", block.clock.certificate)
    rep.add_all("chain", chain)
    _emit(args, rep)


def _cmd_qcpcp_learn(args) -> None:
    v = pcp.verifier_from_json(json.loads(_read(args.verifier)))
    stats = pcp.learn_statistics(
        v, args.gamma, args.eps0, args.eps1, args.delta, seed=args.seed
    )
    learned = pcp.assemble_hamiltonian(stats)
    if args.out:
        Path(args.out).write_text(hamiltonian.to_text(learned.ham))
    rep = reports.Report("qcpcp-learn")
    rep.add_all(
        "parameters",
        {
            "verifier": args.verifier,
            "gamma": args.gamma,
            "eps0": args.eps0,
            "eps1": args.eps1,
            "delta": args.delta,
            "seed": args.seed,
        },
    )
    rep.add_all(
        "statistics",
        {
            "runs_per_string": stats.t_per_z,
            "query_count": stats.q,
            "index_space": stats.omega_size,
            "tuples_kept": len(stats.p_tilde),
            "total_mass": stats.total_mass,
            "invalid_tuples": len(stats.invalid_tuples),
            "defaulted_estimates": len(stats.undefined_lam),
        },
    )
    for key in sorted(stats.p_tilde):
        rep.add("distribution", f"p{key}", stats.p_tilde[key])
    rep.add_all(
        "certificate",
        {
            "norm_error_bound": learned.bound,
            "tuple_count": learned.m_tuples,
            "weight_norm": learned.w_norm,
            "proof_bits": learned.ham.n,
            "terms": learned.ham.m,
            "out": args.out or "none",
        },
    )

    def draw(ax):
        keys = sorted(stats.p_tilde)
        vals = [stats.p_tilde[k] for k in keys]
        ax.bar(range(len(keys)), vals)
        ax.set_xticks(range(len(keys)))
        ax.set_xticklabels([str(k) for k in keys], rotation=45, ha="right", fontsize=7)
        ax.set_ylabel("estimated probability")
        ax.set_title("index-tuple distribution")

    _emit(args, rep, figures=[("distribution", draw)])


def _cmd_oracle_diag(args) -> None:
    h = hamiltonian.ingest(_read(args.hamiltonian))
    dec = dense.diagonalize(h)
    rows = [(i, float(v)) for i, v in enumerate(dec.eigenvalues)]
    if args.csv:
        reports.write_csv(args.csv, ["index", "eigenvalue"], rows)
    else:
        sys.stdout.write("index,eigenvalue\n")
        for i, v in rows:
            sys.stdout.write(f"{i},{v!r}\n")
    rep = reports.Report("oracle-diag")
    rep.add_all(
        "parameters", {"hamiltonian": args.hamiltonian, "csv": args.csv or "stdout"}
    )
    rep.add_all(
        "spectrum",
        {
            "n": h.n,
            "terms": h.m,
            "lambda0": dec.lambda0,
            "lambda_max": float(dec.eigenvalues[-1]),
            "ground_degeneracy": dec.ground_degeneracy,
        },
    )

    def draw(ax):
        ax.plot(dec.eigenvalues, marker=".", ls="none", ms=3)
        ax.set_xlabel("index")
        ax.set_ylabel("eigenvalue")
        ax.set_title(f"spectrum, n={h.n}")

    _emit(args, rep, figures=[("spectrum", draw)])


def _cmd_mps2circ(args) -> None:
    state = parse_state(_read(args.state))
    if not isinstance(state, MpsState):
        raise ValidationError("mps2circ needs a state file of kind 'mps'")
    circ = state.to_circuit(args.eps)
    Path(args.out).write_text(json.dumps(circuit_to_json(circ), indent=1))
    rep = reports.Report("mps2circ")
    rep.add_all("parameters", {"state": args.state, "eps": args.eps, "out": args.out})
    info = {
        "sites": state.n,
        "bond_dimension": state.bond_dimension,
        "circuit_qubits": circ.n,
        "gate_count": len(circ.gates),
    }
    if circ.n <= dense.STATEVECTOR_CAP:
        psi = dense.run_circuit(circ)
        target = state.statevector()
        if circ.n > state.n:
            target = np.kron(target, dense.zero_state(circ.n - state.n))
        info["measured_fidelity"] = dense.fidelity(psi, target)
    rep.add_all("circuit", info)
    _emit(args, rep)


def _cmd_csp2ham(args) -> None:
    nvars, clauses = amplify.parse_dimacs(_read(args.dimacs))
    h, thresholds = amplify.csp_to_diagonal(clauses, m_total=args.m_total, gamma=args.gamma)
    Path(args.out).write_text(hamiltonian.to_text(h))
    rep = reports.Report("csp2ham")
    rep.add_all(
        "parameters",
        {
            "dimacs": args.dimacs,
            "m_total": args.m_total if args.m_total is not None else len(clauses),
            "gamma": args.gamma,
        },
    )
    rep.add_all(
        "instance",
        {
            "variables": nvars,
            "clauses": len(clauses),
            "qubits": h.n,
            "terms": h.m,
            "out": args.out,
        },
    )
    if thresholds is not None:
        rep.add_all("thresholds", {"a": thresholds[0], "b": thresholds[1]})
    _emit(args, rep)


def _cmd_sample(args) -> None:
    state = parse_state(_read(args.state))
    rng = np.random.default_rng(args.seed)
    if isinstance(state, (MpsState, StabilizerState)):
        draw_one = state.sample
    elif isinstance(state, SubsetState):
        draw_one = state.samplable().sample
    else:
        raise ValidationError(f"state kind {state.description()!r} has no exact sampler")
    counts: dict[int, int] = {}
    for _ in range(args.count):
        j = int(draw_one(rng))
        counts[j] = counts.get(j, 0) + 1
    rep = reports.Report("sample")
    rep.add_all(
        "parameters",
        {"state": args.state, "count": args.count, "seed": args.seed},
    )
    rep.add("result", "distinct_outcomes", len(counts))
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:20]
    for j, c in top:
        rep.add("frequencies", format(j, f"0{state.n}b"), c / args.count)

    def draw(ax):
        ax.bar(range(len(top)), [c / args.count for _, c in top])
        ax.set_xticks(range(len(top)))
        ax.set_xticklabels([format(j, f"0{state.n}b") for j, _ in top], rotation=60, fontsize=7)
        ax.set_ylabel("frequency")
        ax.set_title(f"top outcomes of {args.count} samples")

    _emit(args, rep, figures=[("histogram", draw)])


# -- parser ---------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="hamlab", description=__doc__)
    p.add_argument("--version", action="version", version=f"hamlab {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--report", help="write the report to this file")
        sp.add_argument(
            "--no-figures", action="store_true", help="skip figure rendering"
        )

    sp = sub.add_parser("signpoly", help="build and certify a sign approximant")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--grid-points", type=int, default=100_000)
    common(sp)
    sp.set_defaults(func=_cmd_signpoly)

    sp = sub.add_parser("decide", help="guided ground-energy decision")
    sp.add_argument("--hamiltonian", required=True)
    sp.add_argument("--state", required=True)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--zeta", type=float, required=True)
    sp.add_argument("--strategy", choices=["auto", "expansion", "clenshaw"], default="auto")
    sp.add_argument("--budget", type=int)
    common(sp)
    sp.set_defaults(func=_cmd_decide)

    sp = sub.add_parser("expect", help="moment of a Hamiltonian against a state")
    sp.add_argument("--hamiltonian", required=True)
    sp.add_argument("--state", required=True)
    sp.add_argument("--power", type=int, default=1)
    sp.add_argument("--budget", type=int)
    sp.add_argument(
        "--estimate", type=float, help="per-term eps for the randomized IQP estimator"
    )
    sp.add_argument("--seed", type=int, help="rng seed (required with --estimate)")
    common(sp)
    sp.set_defaults(func=_cmd_expect)

    sp = sub.add_parser("fk-build", help="circuit to clock Hamiltonian")
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--input", help="input register bits")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=_cmd_fk_build)

    sp = sub.add_parser("fk-verify", help="fidelity chain of a pre-idled block instance")
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--input", help="input register bits")
    sp.add_argument("--witness", help="witness register bits")
    sp.add_argument("--idle", type=int, default=0)
    sp.add_argument("--b-offset", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_fk_verify)

    sp = sub.add_parser("qcpcp-learn", help="learn a verifier's diagonal Hamiltonian")
    sp.add_argument("--verifier", required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--eps0", type=float, required=True)
    sp.add_argument("--eps1", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", help="write the learned Hamiltonian here")
    common(sp)
    sp.set_defaults(func=_cmd_qcpcp_learn)

    sp = sub.add_parser("oracle-diag", help="dense spectrum as CSV")
    sp.add_argument("--hamiltonian", required=True)
    sp.add_argument("--csv", help="CSV output path (default stdout)")
    common(sp)
    sp.set_defaults(func=_cmd_oracle_diag)

    sp = sub.add_parser("mps2circ", help="compile an MPS to a state-preparation circuit")
    sp.add_argument("--state", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=_cmd_mps2circ)

    sp = sub.add_parser("csp2ham", help="2-SAT clauses to a diagonal Hamiltonian")
    sp.add_argument("--dimacs", required=True)
    sp.add_argument("--m-total", type=int)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=_cmd_csp2ham)

    sp = sub.add_parser("sample", help="draw basis-state samples from a state")
    sp.add_argument("--state", required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    common(sp)
    sp.set_defaults(func=_cmd_sample)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
        return 0
    except (BudgetExceeded, DegreeOverflow) as exc:
        sys.stderr.write(f"hamlab {args.subcommand}: budget: {exc}\n")
        return BUDGET_EXIT
    except (HamlabError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"hamlab {args.subcommand}: error: {exc}\n")
        return VALIDATION_EXIT


if __name__ == "__main__":
    sys.exit(main())
