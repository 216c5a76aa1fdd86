from orthoreg.services.experiments import ToyConfig, run_toy, toy_summary
from orthoreg.services.regularizer import RegMode

if __name__ == "__main__":
    for mode in RegMode:
        records = run_toy(ToyConfig(n_vectors=12, mode=mode))
        summary = toy_summary(records)
        print(
            f"{mode.value}: mean NN angle "
            f"{summary['initial_mean_nn_angle_deg']:.2f} -> "
            f"{summary['final_mean_nn_angle_deg']:.2f} deg"
        )
