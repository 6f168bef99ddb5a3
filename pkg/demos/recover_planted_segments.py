"""Ward clustering recovers planted segments from standardized rows."""

import numpy as np

import htree


def main():
    data, truth = htree.generate_dataset(6, 900, base_rate=0.05, seed=21)
    stats = htree.fit_standardizer(data)
    Z = htree.transform(data, stats)

    model = htree.cluster(Z, 6)
    ari = htree.adjusted_rand_index(
        np.array(truth["assignments"]), model.assignments
    )
    print(f"adjusted Rand index vs planted assignment: {ari:.4f}")
    print(f"cluster sizes: {list(model.member_counts)}")
    print(f"planted sizes: {[b['size'] for b in truth['blobs']]}")

    heights = [step.distance for step in model.linkage]
    print(f"merge heights monotone: {all(a <= b for a, b in zip(heights, heights[1:]))}")
    print(f"last five merge heights: {[round(h, 2) for h in heights[-5:]]}")

    # routing a blob center lands in that blob's cluster
    for j, blob in enumerate(truth["blobs"][:3]):
        member = np.where(np.array(truth["assignments"]) == j)[0]
        centroid = Z[member].mean(axis=0)
        label, dist = htree.nearest_cluster(centroid, model)
        print(f"blob {j} centroid -> cluster {label} (distance {dist:.3f})")


if __name__ == "__main__":
    main()
