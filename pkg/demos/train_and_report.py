"""End-to-end training walkthrough on a synthetic founder table.

Generates an imbalanced dataset with planted segments, trains the full
pipeline (oversample, cluster, per-cluster tree, persona), prints the
cluster table the way `htree report` would, shows one generated persona,
and proves the saved artifact round-trips losslessly.

Run from anywhere after `pip install -e .`:

    python3 demos/train_and_report.py
"""

import os
import tempfile

import htree


def main():
    data, truth = htree.generate_dataset(4, 800, base_rate=0.03, seed=7)
    print(f"dataset: {data.n_rows} rows, {data.success_count} successes "
          f"({data.success_rate:.1%})")
    print(f"planted blob rates: "
          + ", ".join(f"{b['planted_success_rate']:.3f}" for b in truth["blobs"]))
    print()

    config = htree.TrainConfig(
        n_main_clusters=4,
        min_subcluster_size=10,
        seed=7,
        resample=htree.ResampleConfig(target_success_rate=0.15),
    )
    model = htree.train(data, config)

    print("cluster  members  successes  raw rate  normalized")
    for label in sorted(model.profiles):
        p = model.profiles[label]
        print(f"{label:>7}  {p.member_count:>7}  {p.success_count:>9}  "
              f"{p.raw_success_rate:>8.3f}  {p.normalized_success_rate:>10.3f}")
    print()

    richest = max(model.profiles.values(), key=lambda p: p.normalized_success_rate)
    print(f"cluster {richest.cluster_label} leads on normalized success rate; "
          f"top features by |z|:")
    for name, z in richest.significant_features:
        print(f"  {name:<10} z = {z:+.2f}")
    print()

    desc = model.descriptions[richest.cluster_label]
    if desc is not None:
        print("persona (offline mock):")
        print(htree.render_description(desc))

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.json")
        htree.save_model(model, path)
        reloaded = htree.load_model(path)
        size = os.path.getsize(path)
    print(f"artifact: {size} bytes, round trip equal: {reloaded == model}")


if __name__ == "__main__":
    main()
