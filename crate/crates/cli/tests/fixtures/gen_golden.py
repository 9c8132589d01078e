# Regenerates sym2.golden: eigenvalues of [[1, t], [t, 2]] by Newton's
# method on the characteristic polynomial, truncated below t^32.
import sympy as sp

t, x = sp.symbols("t x")
N = 32
p = sp.expand((x - 1) * (x - 2) - t**2)
dp = sp.diff(p, x)


def trunc(e):
    return sp.series(e, t, 0, N).removeO()


def newton(x0):
    y = sp.Integer(x0)
    for _ in range(6):
        y = trunc(y - p.subs(x, y) / dp.subs(x, y))
    return sp.Poly(sp.expand(y), t)


def fmt(poly):
    terms = sorted(((m[0], c) for m, c in zip(poly.monoms(), poly.coeffs())), key=lambda mc: mc[0])
    out = ""
    for i, (e, c) in enumerate(terms):
        c = sp.Rational(c)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if i == 0:
            out += "-" if c < 0 else ""
        else:
            out += f" {sign} "
        if e == 0:
            out += str(a)
            continue
        if a != 1:
            out += f"{a}*"
        out += "t" if e == 1 else f"t^{e}"
    return out + f" (prec {N})"


with open("sym2.golden", "w") as f:
    f.write("[D]\n")
    for k, x0 in enumerate([1, 2], start=1):
        f.write(f"D[{k}]: {fmt(newton(x0))}\n")
