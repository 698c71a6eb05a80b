# Build a small labelled dataset of compiled circuits and train the CNN detector on it.
# The full corpus (813 graphs, 50 epochs) takes a couple of minutes; this uses a slice.
import numpy as np

from qtrojan import cnn
from qtrojan.dataset import build_dataset, config_by_name, enumerate_graphs, split

cfg = config_by_name("linear5-front-x-1")
graphs = enumerate_graphs()
print(len(graphs), "graphs in the corpus")

ds = build_dataset(cfg, graphs[:120])
print(cfg.name, ds.features.shape, "labels:", np.bincount(ds.labels))

train, test = split(ds.examples, 0.8, seed=0)
fit, val = split(train, 0.9, seed=0)


def xy(examples):
    return np.stack([e.features for e in examples]), np.array([e.label for e in examples])


model, history = cnn.train(cnn.init_weights(0), *xy(fit), cnn.TrainConfig(epochs=10), *xy(val))
for h in history[::3]:
    print(f"epoch {h.epoch:2d}  loss {h.train_loss:.4f}  val acc {h.val_acc:.3f}")

print(cnn.evaluate(model, *xy(test)).as_dict())
