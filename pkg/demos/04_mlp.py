"""A small MLP with batch norm, dropout and early stopping."""
from lorafp import harness, ingest, neural, represent, synthetic
from lorafp.neural import MlpConfig

data = synthetic.make_dataset(4000, seed=4)
splits = harness.Splits.from_manifest(data, ingest.split_dataset(data, seed=0))
rep = represent.fit("powed", splits.train, beta=1.1)
X = {s: harness.features("mlp", rep, splits[s]) for s in harness.SPLITS}
Y = {s: splits[s].coords for s in harness.SPLITS}

# the full-size default network is slow on a laptop; shrink it for the demo
cfg = MlpConfig(layer_widths=(256, 128, 2), batch_size=64, max_epochs=200, patience=15)

# sanity check the hand-written backward pass first
tiny = neural.build(MlpConfig(layer_widths=(4, 2), dropout_rate=0.0))
print("max gradient relative error:", neural.gradient_check(tiny, X["train"][:3], Y["train"][:3]))


def show(epoch, train_loss, val_loss):
    if epoch % 20 == 0:
        print(f"epoch {epoch:4d}  train {train_loss:.4f}  val {val_loss:.4f}")


model, hist = neural.train(neural.build(cfg), (X["train"], Y["train"]), (X["val"], Y["val"]),
                           cfg, callback=show)
print(f"stopped at epoch {hist.stopped_epoch}, restored epoch {hist.best_epoch}")
for s in harness.SPLITS:
    st = harness.error_stats(model.predict(X[s]), Y[s])
    print(f"{s:>5}: mean {st.mean:6.1f} m  median {st.median:6.1f} m")
