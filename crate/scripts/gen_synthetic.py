"""Generates the bundled synthetic ODE systems (deterministic)."""
import random
import sys

FN_PROB = 0.6


def expr(rng, names, budget, used):
    """Random expression with at most `budget` nodes; returns (text, size).
    Leaves prefer variables not yet used in the equation."""
    if budget < 3 or rng.random() < 0.05:
        fresh = [n for n in names if n not in used]
        if fresh and rng.random() < 0.95:
            v = rng.choice(fresh)
            used.add(v)
            return v, 1
        return "k%d" % rng.randint(1, 2), 1
    if budget >= 4 and rng.random() < FN_PROB:
        fn = rng.choice(["mm", "hill"])
        parts, size = [], 1
        for k in range(3):
            t, ts = expr(rng, names, max(1, (budget - size) - (2 - k)) if k == 2 else rng.randint(1, max(1, (budget - size - (2 - k)) // 2)), used)
            parts.append(t)
            size += ts
        return "%s(%s)" % (fn, ", ".join(parts)), size
    op = rng.choice("+-*/+*")
    left_budget = rng.randint(1, budget - 2)
    lt, ls = expr(rng, names, left_budget, used)
    rt, rs = expr(rng, names, budget - 1 - ls, used)
    return "(%s %s %s)" % (lt, op, rt), ls + rs + 1


def system(seed, m, prefix):
    rng = random.Random(seed)
    names = ["%s%d" % (prefix, i) for i in range(1, m + 1)]
    lines = ["# synthetic system, %d variables, seed %d" % (m, seed)]
    for n in names:
        text, size = expr(rng, names, rng.randint(11, 12), set())
        assert size <= 12
        lines.append("d%s/dt = %s" % (n, text[1:-1] if text.startswith("(") else text))
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    out = sys.argv[1]
    open(out + "/s11.ode", "w").write(system(111, 11, "X"))
    open(out + "/s14.ode", "w").write(system(114, 14, "Y"))
