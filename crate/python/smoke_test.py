"""Smoke test for the transference_lab extension module."""

from fractions import Fraction

import transference_lab as tl


def main():
    assert tl.delta_value(2) == 1
    assert tl.delta_value(3) == Fraction(3, 4)
    table = tl.delta_table(8)
    assert len(table) == 7 and all(isinstance(v, Fraction) for v in table)
    assert all(a >= b for a, b in zip(table, table[1:]))

    vol = tl.box_section_volume([1, 2, 3], [1, 1, 1])
    assert vol["coeff"] == 8 and vol["norm_sq"] == 3

    golden = tl.Matrix([["63245986/102334155"]])
    records = golden.best_approximations(1000)
    xs = [r.x[0] for r in records]
    fib = [1, 2]
    while fib[-1] + fib[-2] <= 1000:
        fib.append(fib[-1] + fib[-2])
    assert xs == fib, xs
    beta, mbeta = tl.estimate_exponents(records, 1, 1, tail=0.25)
    assert 0.9 <= beta <= 1.2, beta

    row = tl.Matrix([[Fraction(7, 10), Fraction(11, 17)]])
    assert row.m == 2 and row.n == 1
    assert row.residual([3, 1], [3]) == [Fraction(7, 10) * 3 + Fraction(11, 17) - 3]

    cert = golden.transfer([8], [5])
    assert cert.all_hold and cert.revalidate()
    again = tl.Certificate.from_json(cert.to_json())
    assert again.revalidate()
    assert row.transfer([3, 1], [2], mahler=True).all_hold

    assert tl.dyson_map(3, 2, 1) == Fraction(3, 5)
    assert abs(tl.phi_power(1.5, 2, 1, 10.0) - 0.4577944530359378) < 1e-12
    lw = tl.littlewood_scan("1.41421356237309504880", "1.73205080756887729352", 2000)
    assert lw and all(a[1] > b[1] for a, b in zip(lw, lw[1:]))

    try:
        tl.delta_value(1)
    except ValueError:
        pass
    else:
        raise AssertionError("d = 1 should be rejected")

    print("transference_lab smoke test: ok")


if __name__ == "__main__":
    main()
