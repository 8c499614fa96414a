"""Dimension-dependent constants of the conformal Laplacian."""


def conformal_exponents(n):
    """Return the critical exponent and conformal Laplacian coefficient.

    Parameters
    ----------
    n : int
        Manifold dimension, at least 3.

    Returns
    -------
    p : float
        ``2n / (n - 2)``.
    a : float
        ``4(n - 1) / (n - 2)``.

    Raises
    ------
    ValueError
        If ``n < 3``.
    """
    n = int(n)
    if n < 3:
        raise ValueError(f"dimension must be at least 3, got {n}")
    return 2.0 * n / (n - 2), 4.0 * (n - 1) / (n - 2)
