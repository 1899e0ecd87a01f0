"""Real mode: bind locally runnable open models to the four wire roles.

Models load lazily on first use, one binding per role: an image captioner,
an object detector whose crops are re-captioned (dense captions), a CLIP-style
dual encoder for embeddings, and a small instruct model for chat. Weights
must already be available locally (or downloadable from a configured hub
mirror); nothing here phones home by itself beyond what transformers does.
"""

from __future__ import annotations

import base64
import io


class RealBackends:
    def __init__(self, bindings: dict[str, str]):
        self.bindings = bindings
        self._captioner = None
        self._detector = None
        self._encoder = None
        self._chat = None

    # -- lazy model loading ----------------------------------------------------

    def _caption_pipe(self):
        if self._captioner is None:
            from transformers import pipeline

            self._captioner = pipeline("image-to-text",
                                       model=self.bindings["caption"])
        return self._captioner

    def _detect_pipe(self):
        if self._detector is None:
            from transformers import pipeline

            self._detector = pipeline("object-detection",
                                      model=self.bindings["dense_caption"])
        return self._detector

    def _encode_model(self):
        if self._encoder is None:
            from sentence_transformers import SentenceTransformer

            self._encoder = SentenceTransformer(self.bindings["embed"])
        return self._encoder

    def _chat_pipe(self):
        if self._chat is None:
            from transformers import pipeline

            self._chat = pipeline("text-generation", model=self.bindings["chat"])
        return self._chat

    # -- role handlers ----------------------------------------------------------

    def respond(self, role: str, payload: dict) -> dict:
        handler = {
            "caption": self._handle_caption,
            "dense_caption": self._handle_dense,
            "embed_text": self._handle_embed,
            "embed_image": self._handle_embed,
            "chat": self._handle_chat,
        }[role]
        return handler(payload)

    @staticmethod
    def _decode_image(payload: dict):
        from PIL import Image

        return Image.open(io.BytesIO(base64.b64decode(payload["image_b64"])))

    def _handle_caption(self, payload: dict) -> dict:
        out = self._caption_pipe()(self._decode_image(payload))
        return {"caption": out[0]["generated_text"].strip()}

    def _handle_dense(self, payload: dict) -> dict:
        image = self._decode_image(payload)
        regions = []
        for det in self._detect_pipe()(image):
            box = det["box"]
            bbox = [box["xmin"], box["ymin"], box["xmax"], box["ymax"]]
            crop = image.crop(bbox)
            caption = self._caption_pipe()(crop)[0]["generated_text"].strip()
            regions.append({"label": det["label"], "caption": caption,
                            "bbox": bbox,
                            "confidence": round(float(det["score"]), 6)})
        return {"regions": regions}

    def _handle_embed(self, payload: dict) -> dict:
        model = self._encode_model()
        target = payload["text"] if "text" in payload else self._decode_image(payload)
        vector = model.encode(target)
        return {"embedding": [float(v) for v in vector]}

    def _handle_chat(self, payload: dict) -> dict:
        pipe = self._chat_pipe()
        out = pipe(payload["messages"], max_new_tokens=payload["max_tokens"],
                   do_sample=False)
        text = out[0]["generated_text"]
        if isinstance(text, list):  # chat template output
            text = text[-1]["content"]
        finish = "length" if len(text) >= payload["max_tokens"] * 4 else "stop"
        return {"choices": [{"message": {"content": text},
                             "finish_reason": finish}]}
