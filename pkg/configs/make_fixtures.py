"""Regenerate the synthetic CSV fixtures and the synthetic crystal-field config.

All data are generated from known parameters with a fixed seed so CLI runs
and tests have a ground truth to compare against.
"""
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
DATA = HERE / "data"
SEED = 20240611


def write(path, header, cols):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.10g}" for v in row) + "\n")


def main():
    rng = np.random.default_rng(SEED)
    DATA.mkdir(exist_ok=True)

    # plain spin echo, T2 = 880 us, 2% noise
    tau = np.linspace(20e-6, 1.6e-3, 40)
    y = np.exp(-2 * tau / 880e-6) + 0.02 * rng.normal(size=tau.size)
    write(DATA / "echo_T2_880us.csv", ("tau_us", "amplitude"), (tau * 1e6, y))

    # modulated echo, T2 = 680 us, omega/2pi = 2.5 kHz, m = 0.5, 2% noise
    tau = np.linspace(10e-6, 1.5e-3, 120)
    y = np.exp(-2 * tau / 680e-6) * (1 + 0.5 * np.cos(2 * np.pi * 2500 * tau / 2) ** 2)
    y = y + 0.02 * rng.normal(size=tau.size)
    write(DATA / "echo_modulated_T2_680us.csv", ("tau [us]", "amplitude"), (tau * 1e6, y))

    # hole area vs waiting time, T1 = 5 s, 3% noise
    tw = np.array([0.5, 1, 2, 3, 5, 7, 10, 15])
    y = np.exp(-tw / 5.0) * (1 + 0.03 * rng.normal(size=tw.size))
    write(DATA / "hole_decay_T1_5s.csv", ("t_wait [s]", "hole_area"), (tw, y))

    # spin line: Lorentzian FWHM 29 kHz at 5.99 MHz, 5% noise
    f = np.linspace(5.99e6 - 150e3, 5.99e6 + 150e3, 601)
    y = 1 / (1 + ((f - 5.99e6) / 14.5e3) ** 2) + 0.05 * rng.normal(size=f.size)
    write(DATA / "spin_line_29kHz.csv", ("frequency [MHz]", "signal"), (f / 1e6, y))

    # synthetic C2 crystal field (not a fit to any measured spectrum)
    cf_rng = np.random.default_rng(3)
    lines = []
    for k in (2, 4, 6):
        for q in range(0, k + 1, 2):
            mag = {2: 400, 4: 1000, 6: 400}[k]
            re_ = cf_rng.normal() * mag
            im_ = cf_rng.normal() * mag if q > 0 else 0.0
            lines.append(f'B{k}{q} = "{re_:.6f}{im_:+.6f}j"')
    text = (HERE / "synthetic_cf.toml.in").read_text().replace("@BKQ@", "\n".join(lines))
    (HERE / "synthetic_cf.toml").write_text(text)


if __name__ == "__main__":
    main()
