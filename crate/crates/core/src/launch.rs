//! MPI launch-script generation and per-mode compiler-flag recommendations.

use crate::config::MpiFlavor;
use crate::transform::{InlinePlan, Mode};

/// Local-rank environment variable per MPI flavor.
fn local_rank_var(flavor: MpiFlavor) -> &'static str {
    match flavor {
        MpiFlavor::OpenMpi => "OMPI_COMM_WORLD_LOCAL_RANK",
        MpiFlavor::Mpich => "MPI_LOCALRANKID",
        MpiFlavor::SlurmSrun => "SLURM_LOCALID",
    }
}

/// The `launch.sh` wrapper binding each MPI rank to one GPU. Invoke as
/// `mpirun ... ./launch.sh ./prog ...`.
pub fn generate_launch_script(flavor: MpiFlavor) -> String {
    format!(
        "#!/bin/bash\n\
         # Assume 1 GPU per MPI local rank\n\
         # Set device for this MPI rank:\n\
         export CUDA_VISIBLE_DEVICES=\"${}\"\n\
         # Execute code:\n\
         exec $*\n",
        local_rank_var(flavor)
    )
}

/// nvfortran GPU flag recommendation for a code version, with the inline
/// fragment appended for the fully-DC versions.
pub fn recommend_flags(mode: Mode, inline_plan: &InlinePlan) -> String {
    let base = match mode {
        Mode::A => "-acc=gpu -gpu=cc80",
        Mode::Ad => "-acc=gpu -stdpar=gpu -gpu=cc80,nomanaged",
        Mode::Adu => "-acc=gpu -stdpar=gpu -gpu=cc80,managed",
        Mode::Ad2xu => "-acc=gpu -stdpar=gpu -gpu=cc80,managed",
        Mode::D2xu => "-stdpar=gpu -gpu=cc80",
        Mode::D2xad => "-acc=gpu -stdpar=gpu -gpu=cc80,nomanaged",
    };
    let fragment = match mode {
        Mode::D2xu | Mode::D2xad => inline_plan.flag_fragment(),
        _ => String::new(),
    };
    if fragment.is_empty() {
        base.to_string()
    } else {
        format!("{base} {fragment}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPENMPI_SCRIPT: &str = "#!/bin/bash\n# Assume 1 GPU per MPI local rank\n# Set device for this MPI rank:\nexport CUDA_VISIBLE_DEVICES=\"$OMPI_COMM_WORLD_LOCAL_RANK\"\n# Execute code:\nexec $*\n";

    #[test]
    fn openmpi_script_is_bit_exact() {
        assert_eq!(generate_launch_script(MpiFlavor::OpenMpi), OPENMPI_SCRIPT);
    }

    #[test]
    fn other_flavors_swap_only_the_rank_variable() {
        let mpich = generate_launch_script(MpiFlavor::Mpich);
        assert_eq!(mpich, OPENMPI_SCRIPT.replace("OMPI_COMM_WORLD_LOCAL_RANK", "MPI_LOCALRANKID"));
        let srun = generate_launch_script(MpiFlavor::SlurmSrun);
        assert_eq!(srun, OPENMPI_SCRIPT.replace("OMPI_COMM_WORLD_LOCAL_RANK", "SLURM_LOCALID"));
    }

    #[test]
    fn per_mode_flags() {
        let none = InlinePlan::default();
        assert_eq!(recommend_flags(Mode::A, &none), "-acc=gpu -gpu=cc80");
        assert_eq!(recommend_flags(Mode::Ad, &none), "-acc=gpu -stdpar=gpu -gpu=cc80,nomanaged");
        assert_eq!(recommend_flags(Mode::Adu, &none), "-acc=gpu -stdpar=gpu -gpu=cc80,managed");
        assert_eq!(recommend_flags(Mode::Ad2xu, &none), "-acc=gpu -stdpar=gpu -gpu=cc80,managed");
        assert_eq!(recommend_flags(Mode::D2xu, &none), "-stdpar=gpu -gpu=cc80");

        let plan = InlinePlan {
            callees: ["s2c", "boost", "interp", "c2s", "sv2cv"].iter().map(|s| s.to_string()).collect(),
            reshape: true,
        };
        assert_eq!(
            recommend_flags(Mode::D2xu, &plan),
            "-stdpar=gpu -gpu=cc80 -Minline=reshape,name:s2c,boost,interp,c2s,sv2cv"
        );
        assert_eq!(
            recommend_flags(Mode::D2xad, &plan),
            "-acc=gpu -stdpar=gpu -gpu=cc80,nomanaged -Minline=reshape,name:s2c,boost,interp,c2s,sv2cv"
        );
    }
}
