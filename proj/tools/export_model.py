#!/usr/bin/env python3
"""Export a Hugging Face BERT or RoBERTa encoder for the `model` backend.

    python tools/export_model.py microsoft/codebert-base models/codebert
    export SIMLENS_MODEL_DIR=models/codebert

The target directory receives model.safetensors, config.json and
tokenizer.json. Weights are stored as float32.
"""

import argparse
import json
import pathlib
import sys

SUPPORTED = {"bert", "roberta"}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("checkpoint", help="hub id or local checkpoint directory")
    parser.add_argument("out", type=pathlib.Path, help="directory to create")
    args = parser.parse_args()

    import torch
    from safetensors.torch import save_file
    from transformers import AutoModel, AutoTokenizer

    model = AutoModel.from_pretrained(args.checkpoint)
    if model.config.model_type not in SUPPORTED:
        print(f"unsupported model type {model.config.model_type!r}; need one of {sorted(SUPPORTED)}",
              file=sys.stderr)
        return 2
    tokenizer = AutoTokenizer.from_pretrained(args.checkpoint)
    if not tokenizer.is_fast:
        print("checkpoint has no fast tokenizer (tokenizer.json)", file=sys.stderr)
        return 2

    args.out.mkdir(parents=True, exist_ok=True)
    tensors = {k: v.detach().to(torch.float32).contiguous() for k, v in model.state_dict().items()}
    save_file(tensors, str(args.out / "model.safetensors"), metadata={"source": str(args.checkpoint)})
    (args.out / "config.json").write_text(json.dumps(model.config.to_dict(), indent=2) + "\n")
    tokenizer.backend_tokenizer.save(str(args.out / "tokenizer.json"))
    print(f"wrote {len(tensors)} tensors to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
