/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_decaydemo_free: (a: number, b: number) => void;
export const __wbg_memory_free: (a: number, b: number) => void;
export const __wbg_retrieval_free: (a: number, b: number) => void;
export const decay_demo: (a: number, b: number, c: number, d: number) => [number, number, number];
export const decaydemo_fitted: (a: number) => [number, number];
export const decaydemo_measured: (a: number) => [number, number];
export const decaydemo_tau: (a: number) => number;
export const decaydemo_times: (a: number) => [number, number];
export const eit_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const memory_new: () => [number, number, number];
export const memory_retrieve: (a: number, b: number, c: number, d: number) => [number, number, number];
export const retrieval_height: (a: number) => number;
export const retrieval_metrics: (a: number) => [number, number];
export const retrieval_pixels: (a: number) => [number, number];
export const retrieval_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
