import click
import numpy as np
import pandas as pd

from commands import grp_quantum, parse_steps, pass_session, run_options
from dynamics.quantum import (
    decoherence_landmarks,
    decoherence_report,
    decoherence_time,
    evolve_density,
    gamma_equivalence_check,
    random_density_matrix,
    schroedinger_phase,
)
from extensions import parallel_map
from reports import read_density_matrix, write_density_matrix
from units import parse_energy


def _density_frame(dm) -> pd.DataFrame:
    rows = [
        (a, b, dm.energies[a], dm.energies[b], dm.coeffs[a, b].real, dm.coeffs[a, b].imag)
        for a in range(dm.dim)
        for b in range(dm.dim)
    ]
    return pd.DataFrame(rows, columns=["alpha", "beta", "energy_alpha", "energy_beta", "re", "im"])


input_option = click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
                            help="Density matrix JSON file (energies, re, im, energy_unit).")
project_option = click.option("--project", is_flag=True, help="Clip the input to the nearest valid density matrix.")
tau_option = click.option("--tau", default=None, help="Time quantum (preset value if omitted; SI needs a unit).")


@grp_quantum.command("evolve")
@input_option
@project_option
@tau_option
@click.option("--n", "n", type=click.IntRange(0), required=True)
@click.option("--write-dm", type=click.Path(dir_okay=False), default=None, help="Also save the evolved matrix.")
@run_options
@pass_session
def evolve_cmd(session, input_path, project, tau, n, write_dm):
    """Evolve a density matrix n steps with the backward-difference rule."""
    if not input_path:
        raise click.UsageError("quantum evolve needs --input.")
    constants = session.constants(tau)
    evolved = evolve_density(read_density_matrix(input_path, project=project), n, constants)
    if write_dm:
        write_density_matrix(evolved, write_dm)
    session.emit("quantum evolve", {"input": input_path, "n": n, "tau": constants.tau, "project": project},
                 _density_frame(evolved))


@grp_quantum.command("td")
@click.option("--delta-e", "gaps", multiple=True, required=True, help="Energy gap, e.g. 7meV (repeatable).")
@click.option("--particles", type=click.FloatRange(0.0, min_open=True), default=1.0, show_default=True,
              help="Number of identical particles; gaps add linearly.")
@tau_option
@run_options
@pass_session
def td_cmd(session, gaps, particles, tau):
    """Decoherence time T_d for each energy gap."""
    constants = session.constants(tau)
    rows = []
    for text in gaps:
        delta = particles * parse_energy(text, si=session.si)
        t_d = decoherence_time(delta, constants)
        row = {"delta_e": text, "particles": particles, "delta_e_value": delta, "t_d": t_d}
        if session.si:
            row.update(decoherence_landmarks(t_d))
        rows.append(row)
    session.emit("quantum td", {"delta_e": list(gaps), "particles": particles, "tau": constants.tau},
                 pd.DataFrame(rows))


@grp_quantum.command("decoherence")
@input_option
@project_option
@tau_option
@click.option("--n", "steps", default="0:10", show_default=True, help="Steps: '5', '1:50' or '1,2,10'.")
@run_options
@pass_session
def decoherence_cmd(session, input_path, project, tau, steps):
    """Off-diagonal moduli and T_d for every level pair."""
    if not input_path:
        raise click.UsageError("quantum decoherence needs --input.")
    constants = session.constants(tau)
    report = decoherence_report(read_density_matrix(input_path, project=project), parse_steps(steps), constants)
    session.emit("quantum decoherence", {"input": input_path, "n": steps, "tau": constants.tau}, report.to_frame())


@grp_quantum.command("equivalence")
@input_option
@project_option
@click.option("--dim", type=click.IntRange(2), default=None, help="Use a random density matrix of this size.")
@click.option("--energies", default=None, help="Comma-separated levels for --dim (default: uniform in [0, 1)).")
@tau_option
@click.option("--n", "steps", default="1:10", show_default=True, help="Steps: '5', '1:50' or '1,2,10'.")
@run_options
@pass_session
def equivalence_cmd(session, input_path, project, dim, energies, tau, steps):
    """Largest gap between direct evolution and the gamma transform of the continuous one."""
    if (input_path is None) == (dim is None):
        raise click.UsageError("Give exactly one of --input and --dim.")
    constants = session.constants(tau)
    if input_path:
        dm = read_density_matrix(input_path, project=project)
    else:
        rng = np.random.default_rng(session.seed)
        levels = ([parse_energy(v, si=session.si) for v in energies.split(",")] if energies
                  else np.sort(rng.uniform(0.0, 1.0, dim)))
        if len(levels) != dim:
            raise click.BadParameter(f"--energies lists {len(levels)} levels, --dim is {dim}.")
        dm = random_density_matrix(levels, rng)

    n_values = parse_steps(steps)
    deviations = parallel_map(lambda n: gamma_equivalence_check(dm, n, constants, threads=1),
                              n_values, session.threads)
    session.emit("quantum equivalence", {
        "input": input_path, "dim": dim, "energies": energies, "n": steps, "tau": constants.tau,
    }, pd.DataFrame({"n": n_values, "max_deviation": deviations}))


@grp_quantum.command("defect")
@click.option("--delta-e", "gap", required=True, help="Energy gap, e.g. 7meV.")
@tau_option
@click.option("--n", "steps", default="1:10", show_default=True, help="Steps: '5', '1:50' or '1,2,10'.")
@run_options
@pass_session
def defect_cmd(session, gap, tau, steps):
    """Phase mismatch of a unimodular (Schroedinger-type) discrete evolution."""
    constants = session.constants(tau)
    delta = parse_energy(gap, si=session.si)
    rows = []
    for n in parse_steps(steps):
        phase = schroedinger_phase(n, delta, constants)
        rows.append((n, phase.real, phase.imag))
    session.emit("quantum defect", {"delta_e": gap, "n": steps, "tau": constants.tau},
                 pd.DataFrame(rows, columns=["n", "real_phase", "defect"]))
