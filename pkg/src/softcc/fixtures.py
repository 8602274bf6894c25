"""Generators for the shipped .scc fixture files.

Each function returns the text of one fixture; ``write_all`` writes them
into a directory and ``python -m softcc.fixtures [outdir]`` does so from
the command line.  The distance-based tables are tabulated here from
their defining formulas so the files stay in sync with the generator.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .lang import format_value


def fuzzy_csp() -> str:
    """A two-variable fuzzy constraint problem with interest {x}."""
    return """\
// A small fuzzy constraint problem: one unary constraint per variable
// plus a binary constraint tying them together.  Solving onto {x}
// gives a = 0.8, b = 0, with best level 0.8.
semiring fuzzy;
domain {a, b};
var x, y;

constraint c1(x) { (a) = 0.9; (b) = 0.1; }
constraint c2(x, y) { (a, a) = 0.8; (a, b) = 0.2; (b, a) = 0; (b, b) = 0; }
constraint c3(y) { (a) = 0.9; (b) = 0.5; }

interest {x};
"""


def _closeness_rows(scale: int) -> str:
    lines = []
    for i in range(21):
        for j in range(21):
            v = 1.0 / (1.0 + scale * abs(i - j))
            lines.append(f"  ({i}, {j}) = {format_value(v)};")
    return "\n".join(lines)


_DOMAIN_0_20 = ", ".join(str(i) for i in range(21))


def threshold_hang() -> str:
    """Valued tell then a valued ask that can never fire: the run hangs.

    The store after the tell is the closeness constraint c; the asked
    unary step constraint is 1 on x <= 10 and 0 above, which the store
    does not entail (e.g. the store keeps positive values at x = 11).
    """
    rows_c = _closeness_rows(1)
    rows_b = "\n".join(
        f"  ({i}) = {1 if i <= 10 else 0};" for i in range(21)
    )
    return f"""\
// Tell a closeness preference, then ask for a bound the store does not
// entail: the tell passes its consistency check, the ask hangs.
semiring fuzzy;
domain {{{_DOMAIN_0_20}}};
var x, y;

constraint c(x, y) {{
{rows_c}
}}

constraint bound10(x) {{
{rows_b}
}}

agent = tell(c) ->^0.4 ask(bound10) ->^0.8 stop;
"""


def threshold_entail() -> str:
    """Valued tell then a valued ask of a steeper closeness constraint."""
    rows_c = _closeness_rows(1)
    rows_s = _closeness_rows(2)
    return f"""\
// Tell a closeness preference, then ask for a steeper one.
semiring fuzzy;
domain {{{_DOMAIN_0_20}}};
var x, y;

constraint c(x, y) {{
{rows_c}
}}

constraint steep(x, y) {{
{rows_s}
}}

agent = tell(c) ->^0.4 ask(steep) ->^0.8 stop;
"""


def _moves_table(nvars: int, go_value, per_idle, zero) -> str:
    """Rows over {go, idle}^nvars: each idle slot costs one step down."""
    lines = []
    for combo in range(2 ** nvars):
        atoms = []
        idles = 0
        for k in range(nvars):
            if combo & (1 << k):
                atoms.append("idle")
                idles += 1
            else:
                atoms.append("go")
        if isinstance(go_value, float):
            v = go_value - per_idle * idles
        else:
            v = go_value + per_idle * idles
        lines.append(f"  ({', '.join(atoms)}) = {format_value(v)};")
    lines.append(f"  default = {format_value(zero)};")
    return "\n".join(lines)


def _network_text(semiring: str, go_value, per_idle, one, zero) -> str:
    b2 = _moves_table(2, go_value, per_idle, zero)
    b3 = _moves_table(3, go_value, per_idle, zero)
    defs = []
    for name in ("c1", "c2", "c3", "c5", "c6", "c7"):
        defs.append(f"constraint {name}(p, q) {{\n{b2}\n}}")
    for name in ("c4", "c8"):
        defs.append(f"constraint {name}(p, q, r) {{\n{b3}\n}}")
    defs.append(
        f"constraint is_true(f) {{\n  (true) = {format_value(one)};\n"
        f"  default = {format_value(zero)};\n}}"
    )
    body = "\n\n".join(defs)
    return f"""\
// Four sites, each synchronizing its local processes on shared
// variables; duplicated copies of each shared variable are forced equal
// with diagonal constraints, and each site raises an end flag when its
// local work is told.  The last site waits on the other flags first.
semiring {semiring};
domain {{go, idle, true, false}};
var x_a, y_a, end_a, y_b, z_b, end_b, x_c, z_c, end_c, x_d, y_d, z_d, end_d;

{body}

proc site_a(x_a, y_a, end_a) ::
  exists u. tell(c1(x_a, u)) -> tell(c2(u, y_a)) -> tell(c3(x_a, y_a))
    -> tell(is_true(end_a)) -> stop;

proc site_b(y_b, z_b, end_b) ::
  exists v. tell(c5(y_b, v)) -> tell(c6(z_b, v)) -> tell(is_true(end_b)) -> stop;

proc site_c(x_c, z_c, end_c) ::
  exists w. tell(c4(x_c, w, z_c)) -> tell(is_true(end_c)) -> stop;

proc site_d(x_a, y_a, x_c, y_b, z_b, z_c, end_a, end_b, end_c, x_d, y_d, z_d, end_d) ::
  ask(is_true(end_a)) -> ask(is_true(end_b)) -> ask(is_true(end_c))
    -> tell(c7(x_d, y_d)) -> tell(c8(x_d, y_d, z_d))
    -> tell(diag(x_a, x_d)) -> tell(diag(x_d, x_c))
    -> tell(diag(y_a, y_d)) -> tell(diag(y_d, y_b))
    -> tell(diag(z_b, z_d)) -> tell(diag(z_d, z_c))
    -> tell(is_true(end_d)) -> stop;

agent = ((site_a(x_a, y_a, end_a) || site_b(y_b, z_b, end_b))
  || (site_c(x_c, z_c, end_c)
    || site_d(x_a, y_a, x_c, y_b, z_b, z_c, end_a, end_b, end_c, x_d, y_d, z_d, end_d)));
"""


def network() -> str:
    """Fuzzy four-site synchronization network; idling lowers preference."""
    return _network_text("fuzzy", 1.0, 0.3, 1.0, 0.0)


def network_weighted() -> str:
    """Weighted variant: each idle slot costs 1, impossible rows cost inf."""
    return _network_text("weighted", 0, 1, 0, float("inf"))


def duplicate_proc() -> str:
    """Deliberately invalid: the same procedure name defined twice."""
    return """\
// Invalid on purpose: p is defined twice.
semiring fuzzy;
domain {a};
var x;
proc p(x) :: stop;
proc p(x) :: stop;
agent = p(x);
"""


def dominated_choice() -> str:
    """A choice whose better branch lets branch and bound prune the other."""
    return """\
// A two-branch choice under cut thresholds where one branch's tell is
// pointwise better than the other's, composed with a parallel tell.
// Branch and bound finds the better store on its first pass and the
// raised cut then fails the dominated branch early, so it explores
// strictly fewer runs than plain enumeration.
semiring fuzzy;
domain {a, b};
var u, v;

constraint hi(u) { (a) = 0.9; (b) = 0.8; }
constraint lo(u) { (a) = 0.55; (b) = 0.5; }
constraint ready(v) { (a) = 0.7; (b) = 0.6; }
constraint tz(u) { (a) = 0; (b) = 0; }

agent = ( ask(const(1)) -> tell(hi(u)) ->[tz] stop
        + ask(const(1)) -> tell(lo(u)) ->[tz] stop
       || tell(ready(v)) ->[tz] stop );
"""


FILES = {
    "fig1.scc": fuzzy_csp,
    "example5_cprime.scc": threshold_hang,
    "example5_cpp.scc": threshold_entail,
    "network.scc": network,
    "network_weighted.scc": network_weighted,
    "bad_dup_proc.scc": duplicate_proc,
    "dominated_choice.scc": dominated_choice,
}


def write_all(outdir) -> list:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, gen in FILES.items():
        path = out / name
        path.write_text(gen())
        written.append(path)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    for p in write_all(target):
        print(p)
