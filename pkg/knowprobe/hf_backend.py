# -*- coding: utf-8 -*-
"""HuggingFace causal LM behind the adapter interface (`pip install knowprobe[hf]`).

Forward, attention and sampling passes all see exactly the ids they are given;
only `token_logprobs` puts BOS in front, to condition the first token.
"""
import logging

import torch

from .model_adapter import LanguageModelAdapter, TokenSequence

logger = logging.getLogger(__name__)


class HuggingFaceAdapter(LanguageModelAdapter):
    name = 'hf'

    def __init__(self, model_name, device='cpu', attention_layers=None, max_new_tokens=32):
        from transformers import AutoModelForCausalLM, AutoTokenizer
        super(HuggingFaceAdapter, self).__init__(attention_layers=attention_layers)
        self.model_name = model_name
        self.device = torch.device(device)
        self.max_new_tokens = max_new_tokens
        self.tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)
        # eager attention is the implementation that returns attention weights
        self.model = AutoModelForCausalLM.from_pretrained(
            model_name, attn_implementation='eager').to(self.device).eval()
        logger.info("loaded %s on %s", model_name, self.device)

    @property
    def embedding_dim(self):
        return self.model.get_input_embeddings().embedding_dim

    @property
    def bos_id(self):
        if self.tokenizer.bos_token_id is not None:
            return self.tokenizer.bos_token_id
        return self.tokenizer.eos_token_id

    def _tokenize(self, text):
        enc = self.tokenizer(text, add_special_tokens=False, return_offsets_mapping=True)
        return TokenSequence(tuple(enc['input_ids']),
                             tuple(tuple(span) for span in enc['offset_mapping']), text)

    def detokenize(self, ids):
        return self.tokenizer.decode(ids, skip_special_tokens=True).strip()

    def _embed_ids(self, ids):
        with torch.no_grad():
            return self.model.get_input_embeddings()(ids.to(self.device)).detach()

    def _probabilities(self, embeddings):
        dtype = self.model.get_input_embeddings().weight.dtype
        out = self.model(inputs_embeds=embeddings.to(self.device, dtype))
        return torch.softmax(out.logits.float(), dim=-1)

    def _attention_maps(self, ids):
        out = self.model(input_ids=ids.unsqueeze(0).to(self.device), output_attentions=True)
        return torch.stack([a[0] for a in out.attentions]).float()

    def _sample(self, prompt_ids, n, temperature, seed):
        torch.manual_seed(seed)
        if torch.cuda.is_available():
            torch.cuda.manual_seed_all(seed)
        input_ids = torch.as_tensor([list(prompt_ids)], dtype=torch.long, device=self.device)
        with torch.no_grad():
            out = self.model.generate(
                input_ids, attention_mask=torch.ones_like(input_ids), do_sample=True,
                temperature=temperature, num_return_sequences=n,
                max_new_tokens=self.max_new_tokens,
                pad_token_id=self.tokenizer.eos_token_id)
        generations = []
        eos = self.tokenizer.eos_token_id
        for row in out[:, input_ids.shape[1]:].tolist():
            if eos in row:
                row = row[:row.index(eos)]
            generations.append(row)
        return generations
