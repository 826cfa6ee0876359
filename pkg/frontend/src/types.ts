export type Edge = [number, number];

export interface WeightedEdge {
  edge: Edge;
  w: number;
}

export interface GraphPayload {
  nodes: string[];
  edges: Edge[];
  kind: string;
}

export type SessionStatus = 'ready' | 'training' | 'closed' | 'error';

export interface RevisionPayload {
  kind: 'set-tau' | 'cut-edges';
  tau?: number;
  edges?: Edge[];
}

export interface HistoryEntry {
  revision: { kind: string; tau: number | null; edges: Edge[] } | null;
  injected_graph: GraphPayload | null;
  extracted_graph: GraphPayload;
  metrics: Record<string, number>;
}

export interface SessionState {
  session_id: string;
  status: SessionStatus;
  error: string | null;
  task: string;
  tau: number;
  contested: boolean;
  node_names: string[];
  graph: GraphPayload;
  edge_weights: WeightedEdge[];
  candidate_edges: WeightedEdge[];
  adjacency: number[][];
  banned_edges: Edge[];
  metrics: Record<string, number>;
  history: HistoryEntry[];
}

export interface AcceptResponse {
  session_id: string;
  graph: GraphPayload;
  metrics: Record<string, number>;
  checkpoint: string;
}

export interface CheckpointArray {
  shape: number[];
  dtype: string;
  data: string; // base64 little-endian
}

export interface CheckpointPayload {
  format: string;
  task: string;
  d: number;
  hidden_sizes: number[];
  seed: number;
  mask: CheckpointArray;
  arrays: Record<string, CheckpointArray>;
}
