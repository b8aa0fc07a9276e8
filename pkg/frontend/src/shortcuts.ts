/**
 * Single source of truth for commands and their key bindings.
 *
 * Toolbar buttons, tooltips, the keyboard dispatcher, and the help screen
 * are all generated from this table, so a binding can never drift between
 * surfaces. Bindings are mnemonic single keys plus arrow navigation;
 * `mod` marks Ctrl/Cmd combinations.
 */

export type CommandGroup = "tools" | "mask" | "navigation" | "edit" | "view" | "project";

export interface Command {
  id: string;
  label: string;
  key: string; // KeyboardEvent.key value
  mod?: boolean; // requires Ctrl/Cmd
  shift?: boolean;
  group: CommandGroup;
  toolbar: boolean; // rendered as a toolbar button
}

export const COMMANDS: readonly Command[] = [
  // tool selection (mirrors the drawing toolset)
  { id: "tool.select", label: "Select annotation", key: "s", group: "tools", toolbar: true },
  { id: "tool.box", label: "Draw bounding box", key: "b", group: "tools", toolbar: true },
  { id: "tool.polygon", label: "Polygon: add points", key: "p", group: "tools", toolbar: true },
  { id: "tool.polygon-remove", label: "Polygon: remove point", key: "u", group: "tools", toolbar: true },
  { id: "tool.polygon-move", label: "Polygon: move point", key: "y", group: "tools", toolbar: true },
  { id: "tool.grabcut-rect", label: "GrabCut: seed rectangle", key: "g", group: "tools", toolbar: true },
  { id: "tool.brush-tp", label: "GrabCut: true-positive brush", key: "t", group: "tools", toolbar: true },
  { id: "tool.brush-tn", label: "GrabCut: true-negative brush", key: "n", group: "tools", toolbar: true },
  { id: "tool.brush-add", label: "Brush: add to mask", key: "a", group: "tools", toolbar: true },
  { id: "tool.brush-remove", label: "Brush: remove from mask", key: "r", group: "tools", toolbar: true },

  // mask post-processing
  { id: "mask.remove-noise", label: "Remove noise from mask", key: "c", group: "mask", toolbar: true },
  { id: "mask.fill-holes", label: "Fill holes in mask", key: "f", group: "mask", toolbar: true },
  { id: "mask.dontcare-border", label: "Add don't-care border", key: "d", group: "mask", toolbar: true },
  { id: "mask.brush-grow", label: "Increase brush size", key: "]", group: "mask", toolbar: true },
  { id: "mask.brush-shrink", label: "Decrease brush size", key: "[", group: "mask", toolbar: true },
  { id: "mask.commit-grabcut", label: "Commit GrabCut mask", key: "Enter", group: "mask", toolbar: true },

  // frame navigation
  { id: "nav.prev", label: "Previous frame", key: "ArrowLeft", group: "navigation", toolbar: true },
  { id: "nav.next", label: "Next frame", key: "ArrowRight", group: "navigation", toolbar: true },
  { id: "nav.retain-prev", label: "Retain when loading previous frame", key: "ArrowLeft", shift: true, group: "navigation", toolbar: true },
  { id: "nav.retain-next", label: "Retain when loading next frame", key: "ArrowRight", shift: true, group: "navigation", toolbar: true },
  { id: "nav.interpolate", label: "Interpolate between keyframes", key: "i", group: "navigation", toolbar: true },

  // editing
  { id: "edit.delete", label: "Delete selected annotation", key: "x", group: "edit", toolbar: true },
  { id: "edit.delete-forward", label: "Delete selected in current and future frames", key: "Delete", group: "edit", toolbar: true },
  { id: "edit.merge-forward", label: "Merge with another in current and future frames", key: "m", group: "edit", toolbar: true },
  { id: "edit.toggle-status", label: "Toggle active / last frame reached", key: "l", group: "edit", toolbar: true },
  { id: "edit.cancel", label: "Cancel current gesture", key: "Escape", group: "edit", toolbar: false },

  // view
  { id: "view.toggle-thermal", label: "Toggle thermal pane", key: "2", group: "view", toolbar: true },
  { id: "view.opacity-up", label: "Increase overlay opacity", key: "+", group: "view", toolbar: true },
  { id: "view.opacity-down", label: "Decrease overlay opacity", key: "-", group: "view", toolbar: true },
  { id: "view.toggle-roi", label: "Toggle don't-care region mask", key: "0", group: "view", toolbar: true },
  { id: "view.help", label: "Show shortcut reference", key: "?", group: "view", toolbar: true },

  // project
  { id: "project.save", label: "Save annotations", key: "s", mod: true, group: "project", toolbar: true },
  { id: "project.export-yolo", label: "Export YOLO labels", key: "e", group: "project", toolbar: true },
  { id: "project.export-coco", label: "Export COCO JSON", key: "j", group: "project", toolbar: true },
] as const;

export function bindingText(command: Command): string {
  const parts: string[] = [];
  if (command.mod) parts.push("Ctrl");
  if (command.shift) parts.push("Shift");
  parts.push(command.key === " " ? "Space" : command.key);
  return parts.join("+");
}

export interface ShortcutRow {
  binding: string;
  label: string;
  group: CommandGroup;
}

/** Help-screen rows, grouped and ordered as declared. */
export function shortcutTable(commands: readonly Command[] = COMMANDS): ShortcutRow[] {
  return commands.map((c) => ({ binding: bindingText(c), label: c.label, group: c.group }));
}

/** Bindings claimed by more than one command (must stay empty). */
export function duplicateBindings(commands: readonly Command[] = COMMANDS): string[] {
  const seen = new Map<string, string>();
  const duplicates: string[] = [];
  for (const command of commands) {
    const binding = bindingText(command);
    const owner = seen.get(binding);
    if (owner !== undefined) {
      duplicates.push(`${binding} (${owner} and ${command.id})`);
    } else {
      seen.set(binding, command.id);
    }
  }
  return duplicates;
}

/** Toolbar commands missing a usable binding (must stay empty). */
export function unboundToolbarCommands(commands: readonly Command[] = COMMANDS): string[] {
  return commands.filter((c) => c.toolbar && !c.key).map((c) => c.id);
}

export function commandForKey(
  event: { key: string; ctrlKey?: boolean; metaKey?: boolean; shiftKey?: boolean },
  commands: readonly Command[] = COMMANDS,
): Command | undefined {
  const mod = Boolean(event.ctrlKey || event.metaKey);
  const shift = Boolean(event.shiftKey);
  return commands.find(
    (c) =>
      c.key.toLowerCase() === event.key.toLowerCase() &&
      Boolean(c.mod) === mod &&
      // punctuation keys already encode shift; only letters/arrows need the flag
      (c.key.length > 1 || /[a-z0-9]/i.test(c.key) ? Boolean(c.shift) === shift : true),
  );
}
