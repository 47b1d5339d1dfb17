import streamlit as st

from ui import molecule_tab, predict_tab

st.set_page_config(page_title="DPI Inspector", layout="wide")
st.title("DPI Inspector")

tabs = st.tabs(["Molecuul", "Voorspelling"])

with tabs[0]:
    molecule_tab.render()

with tabs[1]:
    predict_tab.render()
