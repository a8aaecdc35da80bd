"""Independent brute-force oracles used by the tests.

Deliberately naive: scalar loops, hand-rolled Gaussian elimination with
partial pivoting, no shared code with the package's linear algebra path.
"""

import math


def kernel_scalar(xa, xb, range_):
    d2 = 0.0
    for u, v in zip(xa, xb):
        d2 += (u - v) ** 2
    t = math.sqrt(d2) / range_
    return (1.0 + math.sqrt(5.0) * t + 5.0 * t * t / 3.0) * math.exp(-math.sqrt(5.0) * t)


def gauss_solve(a, b):
    """Solve a x = b by Gaussian elimination with partial pivoting."""
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[pivot][col]) == 0.0:
            raise ZeroDivisionError("singular matrix")
        m[col], m[pivot] = m[pivot], m[col]
        for row in range(col + 1, n):
            factor = m[row][col] / m[col][col]
            for k in range(col, n + 1):
                m[row][k] -= factor * m[col][k]
    x = [0.0] * n
    for row in range(n - 1, -1, -1):
        acc = m[row][n]
        for k in range(row + 1, n):
            acc -= m[row][k] * x[k]
        x[row] = acc / m[row][row]
    return x


def gp_mean_oracle(train_x, train_y, queries, range_, nugget_ratio):
    """Dense-solve GP mean: weights from (C + eta I) w = y, direct sum predict."""
    n = len(train_x)
    cov = [[kernel_scalar(train_x[i], train_x[j], range_) for j in range(n)] for i in range(n)]
    for i in range(n):
        cov[i][i] += nugget_ratio
    weights = gauss_solve(cov, list(train_y))
    out = []
    for q in queries:
        acc = 0.0
        for i in range(n):
            acc += kernel_scalar(q, train_x[i], range_) * weights[i]
        out.append(acc)
    return out
