"""Independent scalar sRGB -> CIELUV conversion used only as a test oracle.

Written directly from the published CIE formulas with no shared code with
the package: sRGB gamma decode, the IEC 61966-2-1 RGB->XYZ matrix for D65,
then the L*u*v* transform against the matrix's own white point.
"""


def srgb_to_luv_oracle(r8: int, g8: int, b8: int) -> tuple[float, float, float]:
    def lin(c8: int) -> float:
        c = c8 / 255.0
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    r, g, b = lin(r8), lin(g8), lin(b8)
    x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b
    y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b
    z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b

    xn = 0.4124564 + 0.3575761 + 0.1804375
    yn = 0.2126729 + 0.7151522 + 0.0721750
    zn = 0.0193339 + 0.1191920 + 0.9503041
    dn = xn + 15.0 * yn + 3.0 * zn
    un_prime = 4.0 * xn / dn
    vn_prime = 9.0 * yn / dn

    yr = y / yn
    lstar = 116.0 * yr ** (1.0 / 3.0) - 16.0 if yr > (6.0 / 29.0) ** 3 else (29.0 / 3.0) ** 3 * yr
    denom = x + 15.0 * y + 3.0 * z
    if denom == 0.0:
        return (lstar, 0.0, 0.0)
    u_prime = 4.0 * x / denom
    v_prime = 9.0 * y / denom
    return (lstar, 13.0 * lstar * (u_prime - un_prime), 13.0 * lstar * (v_prime - vn_prime))
