"""Train a linear embedding with the mining-contrastive loss on Gaussian clusters.

Prints loss and identity separation every ``--every`` steps, then a sweep of
the mining fractions.
"""
import argparse

from eyeglass_synth.loss import gaussian_clusters, toy_train


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--every", type=int, default=50)
    args = p.parse_args()

    X, labels = gaussian_clusters(seed=args.seed)
    res = toy_train(X, labels, steps=args.steps, lr=args.lr)
    print("step\tloss\tseparation")
    for k in range(0, args.steps + 1, args.every):
        print(f"{k}\t{res.loss[k]:.6f}\t{res.separation[k]:.6f}")

    print("\nrho_p\trho_n\tfinal separation")
    for rho_p in (0.25, 0.5, 1.0):
        for rho_n in (0.25, 0.5, 1.0):
            r = toy_train(X, labels, steps=args.steps, lr=args.lr, rho_p=rho_p, rho_n=rho_n)
            print(f"{rho_p}\t{rho_n}\t{r.separation[-1]:.6f}")


if __name__ == "__main__":
    main()
