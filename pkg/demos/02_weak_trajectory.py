"""The weak trajectory: which meters fire, and what they read.

A superposition of three wavepackets is launched from the origin; the
postselection retraces branch I backward from the final time. Three weak
meters sit on trajectories III, II and I at t = 0.7, 2 and 3.15.

The punchline: only the meter on branch I responds, and it reads branch I's
classical position; the meters on the other branches - which carry most of
the probability on the way out - stay silent. Placing all three meters on
branch I instead (second scenario) makes every pointer read the classical
position q_I(t_k), i.e. the weak trajectory is trajectory I itself.

Run:  python3 demos/02_weak_trajectory.py
"""

from weaktraj import scenarios
from weaktraj.weak import weak_trajectory


def show(name):
    config = scenarios.parse_config(scenarios.bundled_config_text(name), name)
    print(f"\n=== scenario {name} ===")
    print(" ".join(config.description.split()))
    _, _, psi, chi, meters = scenarios.resolve(config)
    wt = weak_trajectory(psi, chi, meters)
    by_label = {b.label: b for b in psi.branches}
    for s in wt.samples:
        q = by_label[s.branch].state_at(s.t_k).q
        print(f"  {s.meter:>4} @ t={s.t_k:.3f} on {s.branch:<3} reads "
              f"({s.value[0].real:+.6f}, {s.value[1].real:+.6f})  "
              f"classical ({q[0]:+.6f}, {q[1]:+.6f})")
    for meter_id, reason in wt.silent:
        print(f"  {meter_id:>4} silent ({reason})")


def main():
    show("fig2a")
    show("fig3a")
    print("\nThe retraced branch is the only story the postselected weak")
    print("measurements tell; the silent meters are how the other branches")
    print("disappear from it.")


if __name__ == "__main__":
    main()
