from __future__ import annotations

import pandas as pd
import streamlit as st

from core.config import get_settings
from core.errors import DataError
from models.settings_model import MCDropoutConfig, StubEmbedderConfig
from services.bayes_service import mc_predict, uncertainty
from services.featurizer_service import featurize
from services.model_service import DPIModel, load_model
from services.protein_service import stub_embed
from services.smiles_service import parse_smiles


DEFAULT_RATE = 0.1


@st.cache_resource(show_spinner=False)
def _load(path: str) -> tuple[DPIModel, dict]:
    return load_model(path)


def trained_dropout_rate(echo: dict) -> float:
    """Dropout rate the checkpoint was trained with; MC sampling should reuse it."""
    rate = echo.get("model", {}).get("dropout_rate")
    return DEFAULT_RATE if rate is None else float(rate)


def render():
    settings = get_settings()
    path = st.text_input("Checkpoint", value=settings.checkpoint_path or "")
    smiles = st.text_input("SMILES (drug)", placeholder="Bijv: CCc1ccccc1")
    sequence = st.text_area("Eiwitsequentie", placeholder="MKTAYIAKQR...")

    loaded = None
    if path.strip():
        try:
            loaded = _load(path.strip())
        except (ValueError, RuntimeError) as exc:
            st.error(str(exc))
            return

    settingsContainer, _ = st.columns([2, 4])
    with settingsContainer:
        samples = st.number_input("MC samples (T)", min_value=1, max_value=500, value=30)
        rate = st.slider(
            "Dropout rate",
            min_value=0.0,
            max_value=0.9,
            value=trained_dropout_rate(loaded[1]) if loaded else DEFAULT_RATE,
            step=0.05,
            key=f"dropout_rate:{path.strip()}",
        )
        seed = st.number_input("Seed", value=0, step=1)

    if not st.button("Voorspel", type="primary"):
        return
    if not (loaded and smiles.strip() and sequence.strip()):
        st.warning("Checkpoint, SMILES en sequentie zijn verplicht.")
        return

    try:
        model, echo = loaded
        stub = StubEmbedderConfig(**echo.get("stub", {}))
        if stub.stub_dim != model.config.protein_dim:
            stub = stub.model_copy(update={"stub_dim": model.config.protein_dim})
        graph = featurize(parse_smiles(smiles.strip()))
        protein = stub_embed(sequence.strip(), stub)
        prediction = mc_predict(
            model, graph, protein, MCDropoutConfig(mc_samples=int(samples), dropout_rate=rate, rng_seed=int(seed))
        )
    except DataError as exc:
        st.warning(str(exc))
        return
    except (ValueError, RuntimeError) as exc:
        st.error(str(exc))
        return

    meanContainer, uncertaintyContainer = st.columns([2, 4])
    with meanContainer:
        st.metric("P(interactie)", f"{prediction.p_interaction:.3f}")
    with uncertaintyContainer:
        st.dataframe(
            pd.DataFrame(
                {
                    "kind": ["epistemic", "aleatoric", "total"],
                    "trace": [uncertainty(prediction, k) for k in ("epistemic", "aleatoric", "total")],
                }
            ),
            hide_index=True,
        )
    with st.expander("Samples"):
        st.line_chart(pd.DataFrame(prediction.samples[:, 1], columns=["p_interaction"]))
