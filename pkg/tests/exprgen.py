"""Random generator of total (everywhere-defined) expression trees."""

import numpy as np

from kangle.dsl import Bin, Num, Pow, Unary, Var

SAFE_UNARY = ("sin", "cos", "sinh", "cosh", "atan", "neg")


def random_expr(rng, n_vars, depth):
    """A random expression tree that is smooth on all of R^n.

    Division, log and sqrt only appear through guarded templates whose
    arguments are bounded away from the singular set.
    """
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.4:
            v = round(float(rng.uniform(-1.2, 1.2)), 3)
            if v < 0:
                return Unary("neg", Num(-v))
            return Num(v)
        return Var(int(rng.integers(1, n_vars + 1)))
    kind = rng.random()
    if kind < 0.35:
        op = str(rng.choice(["+", "-", "*"]))
        return Bin(op, random_expr(rng, n_vars, depth - 1),
                   random_expr(rng, n_vars, depth - 1))
    if kind < 0.5:
        # guarded division: denominator 1.5 + (bounded)^2
        num = random_expr(rng, n_vars, depth - 1)
        den = Bin("+", Num(1.5),
                  Pow(Unary("sin", random_expr(rng, n_vars, depth - 1)), 2))
        return Bin("/", num, den)
    if kind < 0.62:
        # guarded log / sqrt of a strictly positive argument
        fn = str(rng.choice(["log", "sqrt"]))
        arg = Bin("+", Num(round(float(rng.uniform(0.5, 2.0)), 3)),
                  Pow(random_expr(rng, n_vars, max(depth - 2, 0)), 2))
        return Unary(fn, arg)
    if kind < 0.72:
        return Pow(random_expr(rng, n_vars, depth - 1),
                   int(rng.integers(0, 4)))
    fn = str(rng.choice(SAFE_UNARY))
    inner = random_expr(rng, n_vars, depth - 1)
    # keep cosh/sinh arguments bounded to avoid overflow in deep nests
    if fn in ("sinh", "cosh"):
        inner = Unary("sin", inner)
    return Unary(fn, inner)
