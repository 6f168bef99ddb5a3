"""Route new records through a trained model and read the explanations."""

import csv
import io
import os
import tempfile

import numpy as np

import htree


def main():
    data, truth = htree.generate_dataset(3, 600, base_rate=0.05, seed=11)
    model = htree.train(data, htree.TrainConfig(
        n_main_clusters=3, min_subcluster_size=8, seed=11,
        resample=htree.ResampleConfig(target_success_rate=0.20)))

    names = data.schema.feature_names
    assignments = np.array(truth["assignments"])

    # one probe per planted blob: its feature-wise median member
    for j in range(3):
        member_rows = data.rows[assignments == j]
        probe = {n: float(np.median(member_rows[:, i]))
                 for i, n in enumerate(names)}
        for n in names:
            if n.startswith("flag_"):
                probe[n] = float(round(probe[n]))
        result = htree.classify(model, probe, record_id=f"blob{j}-median")
        print(f"--- {result.record_id} ---")
        print(result.explanation)
        print()

    with tempfile.TemporaryDirectory() as tmp:
        batch = os.path.join(tmp, "incoming.csv")
        with open(batch, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([data.schema.id_name, *names])
            for i in range(20):
                writer.writerow([f"new-{i}", *(repr(float(v)) for v in data.rows[i])])
        out = io.StringIO()
        histogram = htree.classify_csv(model, batch, out)
        lines = out.getvalue().splitlines()
    print(f"batch of 20 -> predictions per cluster: {dict(sorted(histogram.items()))}")
    print(f"first record: {lines[0]}")


if __name__ == "__main__":
    main()
