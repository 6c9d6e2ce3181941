"""Generate sample rating files for trying the fit command"""
import numpy as np
import pandas as pd

from src.simulation.designs import ESSAY_TOPICS, generate_study2_design
from src.simulation.generator import replication_rng, simulate_dataset

SEED = 42

# Essay ratings on a 1-5 scale for the four topics; a pass (score >= 3)
# follows the generating model, the grade within pass/fail is uniform
frames = []
for k, topic in enumerate(ESSAY_TOPICS):
    print(f"Generating ratings for topic {topic!r}...")
    design = generate_study2_design(topic, seed=SEED)
    frame = simulate_dataset(design.true_params, design, replication=0).to_frame()
    rng = replication_rng(SEED, 0, stream=(99, k))
    passed = frame['score'].to_numpy() == 1
    frame['score'] = np.where(passed, rng.integers(3, 6, len(frame)), rng.integers(1, 3, len(frame)))
    frame.insert(0, 'topic', topic)
    frames.append(frame)

ratings = pd.concat(frames, ignore_index=True)

# Save as CSV
ratings.to_csv('sample_essay_ratings.csv', index=False)
print(f"Saved sample_essay_ratings.csv: {ratings.shape}")

# Save as TSV
ratings.to_csv('sample_essay_ratings.tsv', index=False, sep='\t')
print(f"Saved sample_essay_ratings.tsv: {ratings.shape}")

# Save as Parquet
ratings.to_parquet('sample_essay_ratings.parquet', index=False, engine='pyarrow')
print(f"Saved sample_essay_ratings.parquet: {ratings.shape}")

print("\nTry: python run.py fit --input sample_essay_ratings.csv --threshold 3 --group-by topic --out results")
